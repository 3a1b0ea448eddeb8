"""Exception hierarchy for the toolkit."""


class TriggerForgeError(Exception):
    """Base class for all toolkit errors."""


# --- annotation parsing ---

class MalformedLine(TriggerForgeError):
    def __init__(self, line_no: int, line: str, reason: str):
        super().__init__(f"line {line_no}: {reason}: {line!r}")
        self.line_no = line_no
        self.line = line


class ClassOutOfRange(TriggerForgeError):
    def __init__(self, line_no: int, class_id: int, n_classes: int):
        super().__init__(
            f"line {line_no}: class id {class_id} out of range (have {n_classes} classes)"
        )
        self.line_no = line_no
        self.class_id = class_id


class CoordOutOfRange(TriggerForgeError):
    def __init__(self, line_no: int, field: str, value: float):
        super().__init__(f"line {line_no}: {field}={value} outside its valid range")
        self.line_no = line_no
        self.field = field
        self.value = value


# --- masks ---

class MissingMasks(TriggerForgeError):
    pass


class DimensionMismatch(TriggerForgeError):
    pass


class EmptyMask(TriggerForgeError):
    pass


class AllCandidatesEmpty(TriggerForgeError):
    pass


# --- campaign ---

class NoSourceImages(TriggerForgeError):
    pass


class CampaignFailed(TriggerForgeError):
    pass


class ManifestMismatch(TriggerForgeError):
    def __init__(self, divergences):
        super().__init__(f"{len(divergences)} divergent item(s)")
        self.divergences = list(divergences)


# --- evaluation ---

class ZeroGroundTruth(TriggerForgeError):
    pass


class EmptyManifest(TriggerForgeError):
    pass


# --- desk model ---

class EmptyRegion(TriggerForgeError):
    pass


class EmptyDataset(TriggerForgeError):
    pass
