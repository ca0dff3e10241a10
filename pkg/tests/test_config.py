from pathlib import Path

import pytest

from chansparse import config as cfgmod
from chansparse.config import ConfigError, RunConfig, load_config, parse_config


def test_empty_config_is_default():
    c = parse_config("")
    assert c == RunConfig()
    assert c.bands == ("cmWave", "mmWave", "subTHz") and c.drops == 10_000
    assert c.gen.r_tau == 3.6 and c.gen.zeta_db == 6.0


def test_documented_example_parses():
    doc = cfgmod.__doc__
    block = doc[doc.index(".. code-block:: ini") + len(".. code-block:: ini"):]
    text = "\n".join(line[4:] for line in block.splitlines())
    c = parse_config(text)
    assert "myband" in c.profiles and c.profiles["myband"].n_clusters == 4
    assert c.profiles["subTHz"].ick_db == 17.99
    assert c.sounder.floor_db is None and c.sounder.refine is True


def test_overrides():
    c = parse_config(
        """
[run]
bands = subTHz
modes = ick
drops = 50
seed = 7
[generator]
r_tau = 2.4
zeta_db = 3
ick_db = 12
m_rays = 10
doppler_hz = 0, 50
[band.subTHz]
n_clusters = 4
[emit]
svg = yes
[sounder]
floor_db = -40
clusters = 3
[theory]
cases = 20
"""
    )
    assert c.bands == ("subTHz",) and c.modes == ("ick",) and c.drops == 50
    assert (c.gen.master_seed, c.gen.r_tau, c.gen.zeta_db, c.gen.m_rays) == (7, 2.4, 3.0, 10)
    assert c.gen.doppler_hz_range == (0.0, 50.0)
    assert c.profiles["subTHz"].n_clusters == 4 and c.profiles["subTHz"].ick_db == 12.0
    assert c.profiles["cmWave"].ick_db == 12.0
    assert c.emit_svg and c.sounder.floor_db == -40.0 and c.sounder.clusters == 3
    assert c.theory_cases == 20


@pytest.mark.parametrize(
    "text",
    [
        "[run]\nbands = xband\n",
        "[run]\nmodes = flat\n",
        "[run]\ndrops = 0\n",
        "[generator]\nr_tau = 0.5\n",
        "[generator]\nspeed = 3\n",
        "[band.new]\nick_db = 3\n",
        "[band.subTHz]\ncolour = 3\n",
        "[mystery]\n",
        "[generator]\nlos = no\n",
        "not ini at all",
    ],
)
def test_invalid(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_cli_overrides_win():
    c = RunConfig().with_cli(seed=5, drops=3, bands=["mmWave"], mode="ick", out="x", svg=True, workers=2)
    assert (c.gen.master_seed, c.drops, c.bands, c.modes, c.out, c.emit_svg, c.workers) == (5, 3, ("mmWave",), ("ick",), Path("x"), True, 2)
    with pytest.raises(ConfigError):
        RunConfig().with_cli(bands=["nope"])


def test_load_config(tmp_path):
    assert load_config(None) == RunConfig()
    p = tmp_path / "c.ini"
    p.write_text("[run]\ndrops = 9\n")
    assert load_config(p).drops == 9
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.ini")
