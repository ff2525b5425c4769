stimulate Balise with Input["Pass"]
check Balise send Telegram to OBU
