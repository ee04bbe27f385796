"""Process kind tag shared by every module."""

import enum


class ProcessKind(str, enum.Enum):
    """Parametric down-conversion or quantum frequency conversion.

    Controls the sign/conjugation variants of the equations of motion:
    PDC couples ``a_s`` to ``a_i^dagger`` (pump at the sum frequency), QFC
    couples ``a_s`` to ``a_i`` (idler at signal + pump).
    """

    PDC = "pdc"
    QFC = "qfc"

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown process kind {value!r}; expected 'pdc' or 'qfc'") from None
