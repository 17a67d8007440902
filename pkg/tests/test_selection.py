import pytest

from logunfold.errors import DataError
from logunfold.selection import aic, npar

# (deviance, size, R, S, published AIC) tuples back-solved from the
# reference analyses: three unsupervised religious-practices fits, three
# unsupervised election fits, three supervised election fits.
PUBLISHED = [
    ("unsupervised", 15254.3, 3525, 6, 1, 22328.3),
    ("unsupervised", 5690.7, 3525, 6, 2, 19824.7),
    ("unsupervised", 1451.8, 3525, 6, 3, 22643.8),
    ("unsupervised", 2089.7, 351, 8, 1, 2823.7),
    ("unsupervised", 918.52, 351, 8, 2, 2368.5),
    ("unsupervised", 295.1, 351, 8, 3, 2459.1),
    ("supervised", 2770.2, 5, 8, 1, 2810.2),
    ("supervised", 2716.3, 5, 8, 2, 2778.3),
    ("supervised", 2681.4, 5, 8, 3, 2763.4),
]


def test_npar_back_solved_values():
    assert npar("unsupervised", 351, 8, 2) == 725
    assert npar("unsupervised", 3525, 6, 1) == 3537
    assert npar("supervised", 5, 8, 2) == 31


def test_aic_formula():
    assert aic(918.52, 725) == pytest.approx(2368.52)
    assert aic(0.0, 0) == 0.0
    assert aic(5690.7, 7067) == pytest.approx(19824.7)


@pytest.mark.parametrize("kind,dev,size,R,S,published", PUBLISHED)
def test_published_aic_reproduction(kind, dev, size, R, S, published):
    assert aic(dev, npar(kind, size, R, S)) == pytest.approx(published, abs=0.15)


def test_strict_convention_differs_by_S():
    for S in (1, 2, 3):
        d_un = npar("unsupervised", 100, 6, S) - npar(
            "unsupervised", 100, 6, S, convention="strict"
        )
        d_su = npar("supervised", 5, 6, S, convention="strict") - npar(
            "supervised", 5, 6, S
        )
        assert d_un == S
        assert d_su == S


def test_strict_convention_formulas():
    # strict removes exactly one parameter per indeterminacy
    I, R, S = 40, 6, 2
    assert npar("unsupervised", I, R, S, "strict") == (I - 1) * S + R * S + R - 1
    P = 4
    assert npar("supervised", P, R, S, "strict") == P * S + R * S + R - 1


def test_reduced_rank_count():
    assert npar("reduced_rank", 5, 8, 2) == 5 * 2 + 8 * 2 + 8 - 4


def test_npar_validation():
    with pytest.raises(DataError):
        npar("unsupervised", 0, 6, 1)
    with pytest.raises(DataError):
        npar("mystery", 10, 6, 1)
    with pytest.raises(DataError):
        npar("unsupervised", 10, 6, 1, convention="loose")
