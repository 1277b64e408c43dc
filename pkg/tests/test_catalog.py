import numpy as np
import pytest

from core.driver import Domain, Family
from core.errors import CatalogError, ConfigError
from drivers.catalog import CATALOG, catalog_get, custom, list_catalog


def test_catalog_listing_is_stable():
    rows = list_catalog()
    names = [r["name"] for r in rows]
    assert names == list(CATALOG)
    for name in ("gamma_norm", "robust_gamma_norm", "log_star"):
        assert name in names
    assert rows == list_catalog()


def test_listed_names_resolve():
    for row in list_catalog():
        if row["name"] != "custom":
            assert catalog_get(row["name"]).params["catalog"] == row["name"]


def test_inline_and_keyword_parameters_agree():
    a = catalog_get("robust_gamma_norm(3, 0.25)")
    b = catalog_get("robust_gamma_norm", gamma=3.0, C=0.25)
    y, z = np.array([1.5]), np.array([[0.7]])
    assert a(0.0, y, z) == pytest.approx(b(0.0, y, z))
    assert a.name == "robust_gamma_norm(3,0.25)"


@pytest.mark.parametrize("name", ["nope", "gamma_norm(2, 3)", "gamma_norm(1)", "log_star(-1)"])
def test_bad_lookups_raise(name):
    with pytest.raises(CatalogError):
        catalog_get(name)


def test_gamma_norm_driver_values():
    f = catalog_get("gamma_norm(3)")
    assert f.family is Family.GEOMETRIC
    assert f(0.0, np.array([2.0]), np.array([[2.0]]))[0] == pytest.approx(4.0)


def test_positive_domain_enforced():
    with pytest.raises(ValueError):
        catalog_get("log_star(1)")(0.0, np.array([-1.0]), np.array([[0.0]]))


def test_custom_driver():
    node = {
        "family": "lnq",
        "name": "planted",
        "terms": [{"kind": "linear_y", "coef": "0.5"}, {"kind": "quadratic_z_over_y", "coef": 2}],
        "coefficients": {"alpha": 0.5, "delta": 2},
        "assumptions": ["H1"],
    }
    g = custom(node)
    assert g.family is Family.LNQ and g.domain_y is Domain.POSITIVE
    assert g(0.0, np.array([2.0]), np.array([[1.0]]))[0] == pytest.approx(0.5 * 2.0 + 2.0 * 1.0 / 2.0)
    assert g.parts is None
    assert g.tags == frozenset({"H1"})


def test_custom_driver_errors_carry_keys():
    with pytest.raises(ConfigError) as info:
        custom({"terms": [{"kind": "cubic"}]}, key="driver.custom")
    assert info.value.key == "driver.custom.terms[0]"
    with pytest.raises(ConfigError):
        custom({"family": "two_driver", "terms": [{"kind": "const"}]})
