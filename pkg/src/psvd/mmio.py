"""Matrix Market reading and writing for dense real matrices.

Accepted headers are ``%%MatrixMarket matrix <format> real <symmetry>`` with
format ``coordinate`` or ``array`` and symmetry ``general`` or ``symmetric``.
Keywords are matched case-insensitively, as the format allows.  Everything is
returned dense.
"""

import os

import numpy as np

from .errors import MatrixMarketError, ValidationError

BANNER = "%%MatrixMarket"
FORMATS = ("coordinate", "array")
SYMMETRIES = ("general", "symmetric")


def _tokens(lines, start):
    """Yield ``(line_number, fields)`` for non-blank, non-comment lines."""
    for lineno, raw in enumerate(lines[start:], start=start + 1):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        yield lineno, text.split()


def _float(tok, lineno, path):
    try:
        v = float(tok)
    except ValueError:
        raise MatrixMarketError(f"not a real number: {tok!r}", line=lineno, path=path) from None
    if not np.isfinite(v):
        raise MatrixMarketError(f"non-finite entry {tok!r}", line=lineno, path=path)
    return v


def _int(tok, lineno, path, what):
    try:
        return int(tok)
    except ValueError:
        raise MatrixMarketError(f"{what} must be an integer, got {tok!r}",
                                line=lineno, path=path) from None


def parse_header(line, path=None):
    """Return ``(format, symmetry)`` from the banner line."""
    parts = line.split()
    if len(parts) != 5 or parts[0] != BANNER or parts[1].lower() != "matrix":
        raise MatrixMarketError(
            "header must read '%%MatrixMarket matrix <format> <field> <symmetry>'",
            line=1, path=path)
    fmt, fld, sym = (p.lower() for p in parts[2:])
    if fmt not in FORMATS:
        raise MatrixMarketError(f"unsupported format {fmt!r}", line=1, path=path)
    if fld != "real":
        raise MatrixMarketError(f"unsupported field {fld!r}; only 'real' is read",
                                line=1, path=path)
    if sym not in SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry {sym!r}", line=1, path=path)
    return fmt, sym


def read_matrix_market(path):
    """Read a Matrix Market file into a dense float64 array."""
    path = os.fspath(path)
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise MatrixMarketError(f"cannot read file: {exc}", path=path) from exc
    if not lines:
        raise MatrixMarketError("empty file", line=1, path=path)
    fmt, sym = parse_header(lines[0], path)
    toks = _tokens(lines, 1)
    try:
        lineno, size = next(toks)
    except StopIteration:
        raise MatrixMarketError("missing size line", line=len(lines), path=path) from None

    if fmt == "coordinate":
        if len(size) != 3:
            raise MatrixMarketError("size line must be 'rows cols nnz'", line=lineno, path=path)
        m, n, nnz = (_int(t, lineno, path, "size") for t in size)
    else:
        if len(size) != 2:
            raise MatrixMarketError("size line must be 'rows cols'", line=lineno, path=path)
        m, n = (_int(t, lineno, path, "size") for t in size)
        nnz = None
    if m < 1 or n < 1 or (nnz is not None and nnz < 0):
        raise MatrixMarketError(f"invalid size {m}x{n}", line=lineno, path=path)
    if sym == "symmetric" and m != n:
        raise MatrixMarketError(f"symmetric matrix must be square, got {m}x{n}",
                                line=lineno, path=path)

    A = np.zeros((m, n))
    if fmt == "coordinate":
        count = 0
        for lineno, f in toks:
            if len(f) != 3:
                raise MatrixMarketError("entry must be 'row col value'", line=lineno, path=path)
            i = _int(f[0], lineno, path, "row index")
            j = _int(f[1], lineno, path, "column index")
            v = _float(f[2], lineno, path)
            if not (1 <= i <= m and 1 <= j <= n):
                raise MatrixMarketError(f"index ({i}, {j}) outside {m}x{n}",
                                        line=lineno, path=path)
            if sym == "symmetric" and j > i:
                raise MatrixMarketError(f"symmetric file has upper-triangle entry ({i}, {j})",
                                        line=lineno, path=path)
            count += 1
            if count > nnz:
                raise MatrixMarketError(f"more than the declared {nnz} entries",
                                        line=lineno, path=path)
            A[i - 1, j - 1] += v
            if sym == "symmetric" and i != j:
                A[j - 1, i - 1] += v
        if count != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {count}",
                                    line=len(lines), path=path)
        return A

    # array format: column-major; symmetric stores the lower triangle only
    if sym == "symmetric":
        slots = [(i, j) for j in range(n) for i in range(j, m)]
    else:
        slots = [(i, j) for j in range(n) for i in range(m)]
    pos = 0
    for lineno, f in toks:
        for tok in f:
            if pos >= len(slots):
                raise MatrixMarketError(f"more than the expected {len(slots)} values",
                                        line=lineno, path=path)
            i, j = slots[pos]
            v = _float(tok, lineno, path)
            A[i, j] = v
            if sym == "symmetric":
                A[j, i] = v
            pos += 1
    if pos != len(slots):
        raise MatrixMarketError(f"expected {len(slots)} values, found {pos}",
                                line=len(lines), path=path)
    return A


def write_matrix_market(path, M, comment=None):
    """Write ``M`` as ``array real general`` with 17 significant digits."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or min(M.shape) < 1:
        raise ValidationError(f"expected a non-empty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix contains NaN or Inf")
    out = [f"{BANNER} matrix array real general"]
    if comment:
        out.extend("% " + c for c in str(comment).splitlines())
    out.append(f"{M.shape[0]} {M.shape[1]}")
    out.extend(f"{v:.17g}" for v in M.ravel(order="F"))
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(out) + "\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write Matrix Market file {os.fspath(path)!r}: "
                                 f"{exc.strerror}") from exc
