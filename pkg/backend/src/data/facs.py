"""
FACS reference tables used by the synthetic benchmark.

Emotion -> Action Unit sets follow the AUs recognized per emotion in the
emotion/AU joint-training study; Neutral has no activation.
"""

# Action Unit descriptions (Facial Action Coding System names)
AU_DESCRIPTIONS = {
    1: "Inner Brow Raiser",
    2: "Outer Brow Raiser",
    4: "Brow Lowerer",
    5: "Upper Lid Raiser",
    6: "Cheek Raiser",
    9: "Nose Wrinkler",
    12: "Lip Corner Puller",
    15: "Lip Corner Depressor",
    17: "Chin Raiser",
    25: "Lips Part",
    26: "Jaw Drop",
}

# Basic emotions in output order
EMOTIONS = ("Angry", "Disgust", "Fear", "Happy", "Sad", "Surprise", "Neutral")

DEFAULT_EMOTION_TO_AUS = {
    "Angry": (4, 9, 25),
    "Disgust": (1, 4, 6),
    "Fear": (5, 25),
    "Happy": (6, 12, 25),
    "Sad": (12, 17),
    "Surprise": (2, 25, 26),
    "Neutral": (),
}

# Union of the AUs above. The inventory is configurable.
DEFAULT_AU_IDS = (1, 2, 4, 5, 6, 9, 12, 17, 25, 26)

# Compound emotion -> (first component, second component)
DEFAULT_COMPOUND_CLASSES = {
    "angrily disgusted": ("Angry", "Disgust"),
    "angrily surprised": ("Angry", "Surprise"),
    "fearfully angry": ("Fear", "Angry"),
    "fearfully surprised": ("Fear", "Surprise"),
    "happily disgusted": ("Happy", "Disgust"),
    "happily surprised": ("Happy", "Surprise"),
    "sadly angry": ("Sad", "Angry"),
    "sadly disgusted": ("Sad", "Disgust"),
}

# Unbalanced per-class image counts of the compound benchmark
DEFAULT_COMPOUND_COUNTS = {
    "angrily disgusted": 19,
    "angrily surprised": 25,
    "fearfully angry": 19,
    "fearfully surprised": 17,
    "happily disgusted": 486,
    "happily surprised": 36,
    "sadly angry": 15,
    "sadly disgusted": 105,
}

EMOTION_SPACE_NAME = "emotion"
AU_SPACE_NAME = "au"
COMPOUND_SPACE_NAME = "compound"


def au_name(au_id: int) -> str:
    return f"AU{au_id}"


def describe_au(au_id: int) -> str:
    return f"{au_name(au_id)} ({AU_DESCRIPTIONS.get(au_id, 'unknown')})"
