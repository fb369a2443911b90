"""CSV and PGM serialization with byte-deterministic formatting."""
from __future__ import annotations

import numpy as np

# 17 significant digits: lossless double round-trip, diff-friendly.
_REAL_FMT = "{:.16e}"


def fmt_real(x: float) -> str:
    return _REAL_FMT.format(float(x))


def spectrum_csv(records) -> str:
    """Rows of (n, z, kind, bracketing Dirichlet eigenvalues)."""
    lines = ["n,z,kind,E_below,E_above"]
    for n, z, kind, e_below, e_above in records:
        lines.append(f"{n},{fmt_real(z)},{kind},{fmt_real(e_below)},{fmt_real(e_above)}")
    return "\n".join(lines) + "\n"


def table_csv(records) -> str:
    lines = ["n,z,kind,R1,A,localized"]
    for r in records:
        loc = "true" if r.localized else "false"
        lines.append(f"{r.n},{fmt_real(r.z)},{r.kind},{fmt_real(r.r1)},"
                     f"{fmt_real(r.amplitude)},{loc}")
    return "\n".join(lines) + "\n"


def alpha_sweep_csv(result) -> str:
    lines = ["alpha,localized_count"]
    for alpha, count in zip(result.axis, result.localized_count):
        lines.append(f"{fmt_real(alpha)},{count}")
    return "\n".join(lines) + "\n"


def ecc_sweep_csv(result) -> str:
    lines = ["E,best_alpha,localized_count"]
    for e, best, count in zip(result.axis, result.best_alpha, result.localized_count):
        lines.append(f"{fmt_real(e)},{fmt_real(best)},{count}")
    return "\n".join(lines) + "\n"


def amp_curve_csv(rows) -> str:
    lines = ["alpha,n,A"]
    for alpha, n, amp in rows:
        lines.append(f"{fmt_real(alpha)},{n},{fmt_real(amp)}")
    return "\n".join(lines) + "\n"


def field_csv(field: np.ndarray) -> str:
    """Row-major grid dump, one grid row per CSV line."""
    lines = []
    for row in field:
        lines.append(",".join(fmt_real(v) for v in row))
    return "\n".join(lines) + "\n"


def pgm_bytes(field: np.ndarray) -> bytes:
    """Binary P5 graymap, values scaled linearly by the grid maximum."""
    ny, nx = field.shape
    header = f"P5\n{nx} {ny}\n255\n".encode("ascii")
    peak = float(field.max())
    if peak <= 0.0:
        data = np.zeros(field.shape, dtype=np.uint8)
    else:
        data = np.rint(255.0 * field / peak).astype(np.uint8)
    return header + data.tobytes()
