import importlib
import re
from pathlib import Path

DOCS = Path(__file__).resolve().parents[1] / 'docs'
PACKAGE = Path(__file__).resolve().parents[1] / 'src' / 'qcis'


def documented_modules():
    return re.findall(r'^\.\. automodule:: (\S+)$', (DOCS / 'api.rst').read_text(), flags=re.MULTILINE)


def test_api_page_covers_every_module():
    modules = {f'src.qcis.{path.stem}' for path in PACKAGE.glob('*.py') if path.stem != '__init__'}
    assert set(documented_modules()) == modules


def test_documented_modules_import():
    for name in documented_modules():
        importlib.import_module(name)


def test_autodoc_enabled_and_api_in_toctree():
    assert "'sphinx.ext.autodoc'" in (DOCS / 'conf.py').read_text()
    assert re.search(r'^   api$', (DOCS / 'index.rst').read_text(), flags=re.MULTILINE)
