"""Named dataset suites for the experiment commands.

``syn_overlap`` and ``syn_noise`` are the synthetic grids; ``keel`` is the
80-dataset KEEL collection, read from ``$BI3_KEEL_DIR`` or from the data
shipped with the ``imbalanced-databases`` package; ``dir:PATH`` loads every
``.dat`` / ``.csv`` file in a directory.
"""
import logging
import os
from pathlib import Path

from bi3 import synth
from bi3.dataset import load_file
from bi3.errors import Bi3Error

log = logging.getLogger(__name__)

KEEL_NAMES = (
    "ecoli-0_vs_1", "yeast-1_vs_7", "pima", "glass4", "iris0", "ecoli4", "glass0", "abalone9-18",
    "yeast1", "dermatology-6", "haberman", "yeast-1-4-5-8_vs_7", "vehicle2", "yeast-2_vs_8",
    "vehicle1", "flare-F", "glass-0-1-2-3_vs_4-5-6", "car-good", "vehicle0", "car-vgood", "ecoli1",
    "kr-vs-k-one_vs_draw", "ecoli2", "kr-vs-k-one_vs_fifteen", "segment0", "yeast4", "glass6",
    "winequality-red-4", "yeast3", "poker-9_vs_7", "ecoli3", "kddcup-guess_passwd_vs_satan",
    "page-blocks0", "yeast-1-2-8-9_vs_7", "ecoli-0-3-4_vs_5", "winequality-white-9_vs_4",
    "yeast-2_vs_4", "yeast5", "ecoli-0-6-7_vs_3-5", "kr-vs-k-three_vs_eleven", "ecoli-0-2-3-4_vs_5",
    "winequality-red-8_vs_6", "glass-0-1-5_vs_2", "abalone-17_vs_7-8-9-10", "yeast-0-3-5-9_vs_7-8",
    "abalone-21_vs_8", "yeast-0-2-5-6_vs_3-7-8-9", "yeast6", "yeast-0-2-5-7-9_vs_3-6-8",
    "winequality-white-3_vs_7", "ecoli-0-4-6_vs_5", "winequality-red-8_vs_6-7", "ecoli-0-1_vs_2-3-5",
    "kddcup-land_vs_portsweep", "ecoli-0-2-6-7_vs_3-5", "abalone-19_vs_10-11-12-13",
    "ecoli-0-3-4-6_vs_5", "kr-vs-k-zero_vs_eight", "vowel0", "winequality-white-3-9_vs_5",
    "ecoli-0-6-7_vs_5", "poker-8-9_vs_6", "glass-0-1-6_vs_2", "shuttle-2_vs_5",
    "ecoli-0-1-4-7_vs_2-3-5-6", "winequality-red-3_vs_5", "led7digit-0-2-4-5-6-7-8-9_vs_1",
    "abalone-20_vs_8-9-10", "ecoli-0-1_vs_5", "kddcup-buffer_overflow_vs_back", "glass-0-1-4-6_vs_2",
    "kddcup-land_vs_satan", "glass2", "kr-vs-k-zero_vs_fifteen", "cleveland-0_vs_4", "poker-8-9_vs_5",
    "ecoli-0-1-4-6_vs_5", "poker-8_vs_6", "shuttle-c0-vs-c4", "abalone19",
)

# file names in the imbalanced-databases layout that differ from the dataset name
_FILE_ALIASES = {"new_thyroid1": "new-thyroid1"}


def keel_dir():
    """Directory holding one sub-directory (or file) per KEEL dataset, or None."""
    env = os.environ.get("BI3_KEEL_DIR")
    if env:
        return Path(env)
    try:
        import imbalanced_databases
    except ImportError:
        return None
    path = Path(imbalanced_databases.__file__).parent / "data"
    return path if path.is_dir() else None


def keel_path(name, root=None):
    """Path of the ``.dat`` file for ``name``, or None when it is not available."""
    root = keel_dir() if root is None else Path(root)
    if root is None:
        return None
    stem = _FILE_ALIASES.get(name, name)
    for candidate in (root / name / f"{stem}.dat", root / f"{stem}.dat"):
        if candidate.is_file():
            return candidate
    return None


def load_keel(name, root=None):
    path = keel_path(name, root)
    if path is None:
        raise FileNotFoundError(f"KEEL dataset {name!r} not found")
    ds = load_file(path, fmt="keel")
    return type(ds)(ds.X, ds.y, ds.schema, ds.class_names, name=name, info=ds.info)


def keel_suite(names=KEEL_NAMES, root=None):
    """Load every available dataset of ``names``; missing ones are logged and skipped."""
    out = []
    for name in names:
        if keel_path(name, root) is None:
            log.warning("skipping %s: not found", name)
            continue
        out.append(load_keel(name, root))
    return out


def directory_suite(path):
    out = []
    for p in sorted(Path(path).iterdir()):
        if p.suffix.lower() not in (".dat", ".csv"):
            continue
        try:
            out.append(load_file(p))
        except (Bi3Error, OSError) as exc:
            log.warning("skipping %s: %s", p, exc)
    return out


def synthetic_suite(family, seed=0, draws=synth.DRAWS):
    return [ds for _, ds in synth.suite(family, seed, draws)]


def resolve(name, seed=0):
    """Datasets of a named suite, in a fixed order."""
    if name == "syn_overlap":
        return synthetic_suite("overlap", seed)
    if name == "syn_noise":
        return synthetic_suite("noise", seed)
    if name == "keel":
        if keel_dir() is None:
            raise FileNotFoundError("no KEEL data: set BI3_KEEL_DIR or install imbalanced-databases")
        return keel_suite()
    if name.startswith("dir:"):
        path = Path(name[4:])
        if not path.is_dir():
            raise FileNotFoundError(f"{path} is not a directory")
        return directory_suite(path)
    raise ValueError(f"unknown suite {name!r}")
