"""Model file parsing: shipped models load with the right physics, and
malformed files fail loudly with the offending path in the message."""

import textwrap

import numpy as np
import numpy.testing as npt
import pytest

from rpcompass import (
    ModelFileError,
    load_shipped_model,
    load_spin_system,
    shipped_model_names,
    shipped_models_dir,
)
from rpcompass.constants import DEFAULT_G_FACTOR
from rpcompass.hamiltonian import point_dipole_tensor


def _write_model(tmp_path, body):
    path = tmp_path / "model.tomlish"
    path.write_text(textwrap.dedent(body))
    return path


MINIMAL = """\
    name = "m"
    [rates]
    k_b_per_us = 1.0
    k_f_per_us = 2.0
    """


def test_shipped_model_names():
    assert shipped_model_names() == (
        "electron_pair", "fad_w_2n", "fad_z_1n", "synth_3n", "synth_4n",
    )
    assert shipped_models_dir().is_dir()


def test_all_shipped_models_load():
    dims = {}
    for name in shipped_model_names():
        system = load_shipped_model(name)
        assert system.name == name
        dims[name] = system.dim
    assert dims == {
        "electron_pair": 4,
        "fad_z_1n": 12,
        "fad_w_2n": 24,
        "synth_3n": 32,
        "synth_4n": 64,
    }


def test_electron_pair_is_bare():
    system = load_shipped_model("electron_pair")
    assert system.nuclei == ()
    assert system.eed_mT is None
    assert system.k_b == 1.0 and system.k_f == 1.0
    assert system.g_factor == DEFAULT_G_FACTOR


def test_fad_z_1n_contents():
    system = load_shipped_model("fad_z_1n")
    (n5,) = system.nuclei
    assert (n5.label, n5.radical, n5.multiplicity) == ("N5", "A", 3)
    assert n5.hyperfine_mT[2, 2] == 1.7569
    # the file stores a displacement; loading expands it with the file's g
    npt.assert_array_equal(
        system.eed_mT, point_dipole_tensor([0.0, 0.0, 2.0], 2.0013)
    )


def test_fad_w_2n_contents():
    system = load_shipped_model("fad_w_2n")
    assert [(n.label, n.radical) for n in system.nuclei] == [
        ("N5", "A"), ("H_beta", "B"),
    ]
    assert system.eed_mT is not None


def test_synth_3n_explicit_eed_tensor():
    system = load_shipped_model("synth_3n")
    npt.assert_array_equal(
        system.eed_mT,
        [[0.12, 0.0, 0.03], [0.0, 0.10, 0.0], [0.03, 0.0, -0.22]],
    )


def test_minimal_file_defaults(tmp_path):
    system = load_spin_system(_write_model(tmp_path, MINIMAL))
    assert system.name == "m"
    assert system.k_f == 2.0
    assert system.g_factor == DEFAULT_G_FACTOR
    assert system.eed_mT is None


def test_unknown_shipped_name_lists_available():
    with pytest.raises(ModelFileError, match=r"no shipped model 'nope'.*fad_z_1n"):
        load_shipped_model("nope")


def test_missing_file_names_path(tmp_path):
    path = tmp_path / "absent.tomlish"
    with pytest.raises(ModelFileError, match="absent.tomlish"):
        load_spin_system(path)


def test_parse_error_is_wrapped(tmp_path):
    path = _write_model(tmp_path, "name = [unbalanced")
    with pytest.raises(ModelFileError, match="parse error"):
        load_spin_system(path)


def test_unknown_top_level_key(tmp_path):
    body = """\
        name = "m"
        typo_key = 1
        [rates]
        k_b_per_us = 1.0
        k_f_per_us = 1.0
        """
    with pytest.raises(ModelFileError, match=r"unknown key\(s\) \['typo_key'\] in top level"):
        load_spin_system(_write_model(tmp_path, body))


def test_missing_rate_key(tmp_path):
    body = """\
        name = "m"
        [rates]
        k_b_per_us = 1.0
        """
    with pytest.raises(ModelFileError, match=r"missing key\(s\) \['k_f_per_us'\]"):
        load_spin_system(_write_model(tmp_path, body))


def test_boolean_rate_rejected(tmp_path):
    # TOML `true` parses as bool, which is an int subclass; it must not
    # slip through as 1.0
    body = """\
        name = "m"
        [rates]
        k_b_per_us = true
        k_f_per_us = 1.0
        """
    with pytest.raises(ModelFileError, match="must be a number"):
        load_spin_system(_write_model(tmp_path, body))


def test_float_multiplicity_rejected(tmp_path):
    body = MINIMAL + """\
        [[nuclei]]
        label = "H"
        radical = "A"
        multiplicity = 2.0
        tensor_mT = [1,0,0, 0,1,0, 0,0,1]
        """
    with pytest.raises(ModelFileError, match="must be an integer"):
        load_spin_system(_write_model(tmp_path, body))


def test_short_tensor_rejected(tmp_path):
    body = MINIMAL + """\
        [[nuclei]]
        label = "H"
        radical = "A"
        multiplicity = 2
        tensor_mT = [1,0,0, 0,1,0, 0,0]
        """
    with pytest.raises(ModelFileError, match="list of 9 numbers"):
        load_spin_system(_write_model(tmp_path, body))


def test_bad_radical_rejected(tmp_path):
    body = MINIMAL + """\
        [[nuclei]]
        label = "H"
        radical = "C"
        multiplicity = 2
        tensor_mT = [1,0,0, 0,1,0, 0,0,1]
        """
    with pytest.raises(ModelFileError, match="'A' or 'B'"):
        load_spin_system(_write_model(tmp_path, body))


def test_nucleus_validation_wrapped(tmp_path):
    body = MINIMAL + """\
        [[nuclei]]
        label = "H"
        radical = "A"
        multiplicity = 1
        tensor_mT = [1,0,0, 0,1,0, 0,0,1]
        """
    with pytest.raises(ModelFileError, match=r"nuclei\[0\]"):
        load_spin_system(_write_model(tmp_path, body))


def test_eed_requires_exactly_one_form(tmp_path):
    both = MINIMAL + """\
        [eed]
        tensor_mT = [0.1,0,0, 0,0.1,0, 0,0,-0.2]
        point_dipole_r_nm = [0.0, 0.0, 2.0]
        """
    neither = MINIMAL + "[eed]\n"
    for body in (both, neither):
        with pytest.raises(ModelFileError, match="exactly one"):
            load_spin_system(_write_model(tmp_path, body))


def test_asymmetric_eed_rejected(tmp_path):
    body = MINIMAL + """\
        [eed]
        tensor_mT = [0.1, 0.05, 0, 0, 0.1, 0, 0, 0, -0.2]
        """
    with pytest.raises(ModelFileError, match="symmetric"):
        load_spin_system(_write_model(tmp_path, body))


def test_contact_dipole_rejected(tmp_path):
    body = MINIMAL + """\
        [eed]
        point_dipole_r_nm = [0.0, 0.0, 0.0]
        """
    with pytest.raises(ModelFileError, match="point_dipole_r_nm"):
        load_spin_system(_write_model(tmp_path, body))


def test_nonpositive_rate_wrapped(tmp_path):
    body = """\
        name = "m"
        [rates]
        k_b_per_us = 1.0
        k_f_per_us = 0.0
        """
    with pytest.raises(ModelFileError, match="k_f must be positive"):
        load_spin_system(_write_model(tmp_path, body))
