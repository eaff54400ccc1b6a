"""FCIDUMP reader and writer (Molpro convention, chemists' notation, 1-based)."""

from __future__ import annotations

import re

import numpy as np

from .exceptions import FCIDumpParseError
from .integrals import IntegralSet

_HEADER_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^=]*?)\s*(?=,?\s*[A-Za-z_][A-Za-z0-9_]*\s*=|$)")


def _parse_header(text: str, lineno: int) -> dict[str, str]:
    body = text.strip()
    if not body.upper().startswith("&FCI"):
        raise FCIDumpParseError("header must start with &FCI", lineno)
    body = body[4:]
    body = re.sub(r"(&END|/)\s*$", "", body, flags=re.IGNORECASE)
    fields = {}
    for key, value in _HEADER_KEY.findall(body):
        fields[key.upper()] = value.strip().rstrip(",")
    return fields


def parse_fcidump(text: str) -> IntegralSet:
    lines = text.splitlines()
    header_parts = []
    start = None
    for i, line in enumerate(lines):
        header_parts.append(line)
        stripped = line.strip().upper()
        if stripped.endswith("&END") or stripped.endswith("/") or stripped == "&END":
            start = i + 1
            break
    if start is None:
        raise FCIDumpParseError("unterminated header (missing &END)", 1)
    fields = _parse_header(" ".join(header_parts), 1)
    try:
        norb = int(fields["NORB"])
        nelec = int(fields["NELEC"])
        ms2 = int(fields.get("MS2", "0"))
    except KeyError as exc:
        raise FCIDumpParseError(f"header lacks {exc.args[0]}", 1) from None
    except ValueError as exc:
        raise FCIDumpParseError(f"bad header value: {exc}", 1) from None
    if norb < 1:
        raise FCIDumpParseError("NORB must be positive", 1)

    h = np.zeros((norb, norb))
    eri = np.zeros((norb, norb, norb, norb))
    e_nuc = 0.0
    for lineno, line in enumerate(lines[start:], start=start + 1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 5:
            raise FCIDumpParseError(f"expected 'value i j k l', got {len(tokens)} fields", lineno)
        try:
            value = float(tokens[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(t) for t in tokens[1:])
        except ValueError:
            raise FCIDumpParseError(f"cannot parse record {line.strip()!r}", lineno) from None
        if any(not 0 <= x <= norb for x in (i, j, k, l)):
            raise FCIDumpParseError(f"orbital index out of range in {line.strip()!r}", lineno)
        if i == j == k == l == 0:
            e_nuc = value
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise FCIDumpParseError("one-electron record with a zero index", lineno)
            h[i - 1, j - 1] = h[j - 1, i - 1] = value
        elif 0 in (i, j, k, l):
            raise FCIDumpParseError(f"unsupported index pattern {i} {j} {k} {l}", lineno)
        else:
            p, q, r, s = i - 1, j - 1, k - 1, l - 1
            for a, b, c, d in ((p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
                               (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)):
                eri[a, b, c, d] = value
    return IntegralSet(norb, e_nuc, h, eri, basis_label="FCIDUMP", n_electrons=nelec, ms2=ms2)


def write_fcidump(ints: IntegralSet, tol: float = 1e-15) -> str:
    n = ints.n_spatial
    nelec = ints.n_electrons if ints.n_electrons is not None else 0
    out = [f"&FCI NORB={n},NELEC={nelec},MS2={ints.ms2},", " ORBSYM=" + "1," * n, " ISYM=1,", "&END"]
    fmt = "{: .17e} {:d} {:d} {:d} {:d}"
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    if i * (i + 1) // 2 + j < k * (k + 1) // 2 + l:
                        continue
                    v = ints.eri[i, j, k, l]
                    if abs(v) > tol:
                        out.append(fmt.format(v, i + 1, j + 1, k + 1, l + 1))
    for i in range(n):
        for j in range(i + 1):
            v = ints.h_core[i, j]
            if abs(v) > tol:
                out.append(fmt.format(v, i + 1, j + 1, 0, 0))
    out.append(fmt.format(ints.e_nuc, 0, 0, 0, 0))
    return "\n".join(out) + "\n"


def read_fcidump(path) -> IntegralSet:
    with open(path) as fh:
        return parse_fcidump(fh.read())
