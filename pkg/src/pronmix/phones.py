"""Phone inventory: 42 source phones plus a padding sentinel.

The inventory is the 39 ARPAbet phones plus silence, spoken noise and
non-speech noise, matching the acoustic front end that produces the
posteriorgrams consumed here.  Phone ids are positions in PHONE_NAMES.
"""

PHONE_NAMES = (
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH",
    "EH", "ER", "EY", "F", "G", "HH", "IH", "IY", "JH", "K",
    "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH",
    "T", "TH", "UH", "UW", "V", "W", "Y", "Z", "ZH",
    "SIL", "SPN", "NSN",
)

N_PHONES = len(PHONE_NAMES)  # 42
PAD_ID = N_PHONES  # embedding row one past the real phones


def phone_name(phone_id: int) -> str:
    if not 0 <= phone_id < N_PHONES:
        raise ValueError(f"phone id {phone_id} outside 0..{N_PHONES - 1}")
    return PHONE_NAMES[phone_id]


def spell(phone_ids) -> str:
    """Render a phone-id sequence as its space-joined names."""
    return " ".join(phone_name(int(p)) for p in phone_ids)
