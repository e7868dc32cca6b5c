namespace qctrl {}
