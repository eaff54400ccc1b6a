import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ensemble_cqe.exceptions import FCIDumpParseError
from ensemble_cqe.fcidump import parse_fcidump, read_fcidump, write_fcidump
from ensemble_cqe.integrals import IntegralSet, hydrogen_chain_integrals

MINIMAL = "&FCI NORB=1,NELEC=2,MS2=0,&END\n0.5 1 1 1 1\n-1.0 1 1 0 0\n0.7 0 0 0 0"


def test_minimal_text():
    ints = parse_fcidump(MINIMAL)
    assert ints.n_spatial == 1
    assert ints.eri[0, 0, 0, 0] == 0.5
    assert ints.h_core[0, 0] == -1.0
    assert ints.e_nuc == 0.7
    assert ints.n_electrons == 2 and ints.ms2 == 0


def test_multiline_header_and_fortran_exponent():
    text = "&FCI NORB=2,\n NELEC=2, MS2=0,\n ORBSYM=1,1,\n ISYM=1,\n&END\n 1.0D-1 2 1 1 1\n"
    ints = parse_fcidump(text)
    assert ints.n_spatial == 2
    for idx in [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1)]:
        assert ints.eri[idx] == pytest.approx(0.1)


def test_h2_round_trip():
    ints, _ = hydrogen_chain_integrals(2, 0.7)
    ints.n_electrons = 2
    back = parse_fcidump(write_fcidump(ints))
    assert abs(back.e_nuc - ints.e_nuc) < 1e-12
    assert np.max(np.abs(back.h_core - ints.h_core)) < 1e-12
    assert np.max(np.abs(back.eri - ints.eri)) < 1e-12


def test_read_from_file(tmp_path):
    path = tmp_path / "toy.fcidump"
    path.write_text(MINIMAL)
    assert read_fcidump(path).e_nuc == 0.7


@pytest.mark.parametrize("text,line", [
    ("&FCI NORB=1,NELEC=2,MS2=0,&END\n0.5 1 1 1 1 1\n", 2),
    ("&FCI NORB=1,NELEC=2,&END\n0.5 1 1 1 1\n-1.0 1 1 0\n", 3),
    ("&FCI NORB=1,NELEC=2,&END\nabc 1 1 1 1\n", 2),
    ("&FCI NORB=1,NELEC=2,&END\n0.5 2 1 1 1\n", 2),
])
def test_malformed_record_names_line(text, line):
    with pytest.raises(FCIDumpParseError) as info:
        parse_fcidump(text)
    assert info.value.lineno == line
    assert f"line {line}" in str(info.value)


def test_missing_header_fields():
    with pytest.raises(FCIDumpParseError):
        parse_fcidump("&FCI NELEC=2,&END\n")
    with pytest.raises(FCIDumpParseError):
        parse_fcidump("0.5 1 1 1 1\n")


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_round_trip_property(n, seed):
    rng = np.random.default_rng(seed)
    h = rng.standard_normal((n, n))
    h = h + h.T
    g = rng.standard_normal((n,) * 4)
    perms = [(0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2), (2, 3, 0, 1), (3, 2, 0, 1),
             (2, 3, 1, 0), (3, 2, 1, 0)]
    g = sum(g.transpose(p) for p in perms) / 8
    ints = IntegralSet(n, float(rng.standard_normal()), h, g, n_electrons=n, ms2=0)
    back = parse_fcidump(write_fcidump(ints))
    assert np.max(np.abs(back.h_core - h)) < 1e-12
    assert np.max(np.abs(back.eri - g)) < 1e-12
    assert abs(back.e_nuc - ints.e_nuc) < 1e-12
