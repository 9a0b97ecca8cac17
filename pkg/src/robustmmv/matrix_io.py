"""Text encoding of complex matrices.

One matrix row per line, comma separated, entries written ``a+bi`` / ``a-bi``.
Pure-real entries may omit the imaginary part.  An optional header
``# rows=<n> cols=<p>`` is checked against the data when present.
"""

import re

import numpy as np

from .mmv import as_complex_matrix

_HEADER = re.compile(r"^#\s*rows\s*=\s*(\d+)\s+cols\s*=\s*(\d+)\s*$")


class MatrixFormatError(ValueError):
    pass


def format_complex(z):
    z = complex(z)
    im = repr(z.imag)
    if not im.startswith("-"):
        im = "+" + im
    return f"{z.real!r}{im}i"


def parse_complex(token):
    s = token.strip().replace(" ", "")
    if not s:
        raise MatrixFormatError("empty entry")
    if s.endswith(("i", "I")):
        s = s[:-1] + "j"
    elif s.endswith(("j", "J")):
        raise MatrixFormatError(f"imaginary unit must be written 'i': {token!r}")
    try:
        return complex(s)
    except ValueError:
        raise MatrixFormatError(f"cannot parse complex entry {token!r}") from None


def loads_matrix(text):
    header = None
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            m = _HEADER.match(stripped)
            if m is None:
                raise MatrixFormatError(f"line {lineno}: malformed header {stripped!r}")
            if header is not None or rows:
                raise MatrixFormatError(f"line {lineno}: header must precede data")
            header = (int(m.group(1)), int(m.group(2)))
            continue
        try:
            rows.append([parse_complex(tok) for tok in stripped.split(",")])
        except MatrixFormatError as exc:
            raise MatrixFormatError(f"line {lineno}: {exc}") from None
    if not rows:
        raise MatrixFormatError("no matrix rows found")
    ncols = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != ncols:
            raise MatrixFormatError(f"row {i} has {len(r)} entries, expected {ncols}")
    if header is not None and header != (len(rows), ncols):
        raise MatrixFormatError(
            f"header declares {header[0]}x{header[1]}, data is {len(rows)}x{ncols}")
    try:
        return as_complex_matrix(np.array(rows, dtype=np.complex128))
    except ValueError as exc:
        raise MatrixFormatError(str(exc)) from None


def dumps_matrix(M, header=True):
    M = np.atleast_2d(np.asarray(M, dtype=np.complex128))
    lines = [f"# rows={M.shape[0]} cols={M.shape[1]}"] if header else []
    lines += [",".join(format_complex(z) for z in row) for row in M]
    return "\n".join(lines) + "\n"


def read_matrix(path):
    with open(path, encoding="utf-8") as fh:
        return loads_matrix(fh.read())


def write_matrix(path, M, header=True):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_matrix(M, header=header))
