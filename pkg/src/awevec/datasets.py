"""Download and checksum the word-similarity benchmark files.

Dataset files are never vendored in the repository. `awevec fetch-data`
downloads them from the registry below and records each file's SHA-256 in a
manifest next to the data (trust on first use); later fetches verify
against the manifest and refuse silently changed files. A registry entry
may also pin an expected hash up front, and the whole registry can be
swapped out with a JSON file for alternative mirrors.
"""

from __future__ import annotations

import hashlib
import json
import logging
import shutil
import tempfile
import urllib.request
import zipfile
from pathlib import Path

logger = logging.getLogger(__name__)

# name -> {url, filename, sha256 (optional pin), zip_member (optional)}
DEFAULT_REGISTRY: dict[str, dict] = {
    "men": {
        "url": "https://raw.githubusercontent.com/vecto-ai/word-benchmarks/master/word-similarity/monolingual/en/men.csv",
        "filename": "men.csv",
    },
    "ws353": {
        "url": "https://raw.githubusercontent.com/vecto-ai/word-benchmarks/master/word-similarity/monolingual/en/ws353.csv",
        "filename": "ws353.csv",
    },
    "ws353-rel": {
        "url": "https://raw.githubusercontent.com/vecto-ai/word-benchmarks/master/word-similarity/monolingual/en/ws353-relatedness.csv",
        "filename": "ws353-rel.csv",
    },
    "ws353-sim": {
        "url": "https://raw.githubusercontent.com/vecto-ai/word-benchmarks/master/word-similarity/monolingual/en/ws353-similarity.csv",
        "filename": "ws353-sim.csv",
    },
    "simlex999": {
        "url": "https://raw.githubusercontent.com/vecto-ai/word-benchmarks/master/word-similarity/monolingual/en/simlex999.csv",
        "filename": "simlex999.csv",
    },
    "rw": {
        "url": "https://raw.githubusercontent.com/vecto-ai/word-benchmarks/master/word-similarity/monolingual/en/rw.csv",
        "filename": "rw.csv",
    },
    "rg65": {
        "url": "https://raw.githubusercontent.com/vecto-ai/word-benchmarks/master/word-similarity/monolingual/en/rg-65.csv",
        "filename": "rg65.csv",
    },
    "mturk287": {
        "url": "https://raw.githubusercontent.com/vecto-ai/word-benchmarks/master/word-similarity/monolingual/en/mturk-287.csv",
        "filename": "mturk287.csv",
    },
    # desk-scale training corpus (first 10^8 bytes of cleaned Wikipedia text)
    "text8": {
        "url": "https://mattmahoney.net/dc/text8.zip",
        "filename": "text8",
        "zip_member": "text8",
    },
}

SIMILARITY_NAMES = [
    "men", "ws353", "ws353-rel", "ws353-sim",
    "simlex999", "rw", "rg65", "mturk287",
]


def load_registry(path: str | Path | None) -> dict[str, dict]:
    if path is None:
        return DEFAULT_REGISTRY
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _manifest_path(dest: Path) -> Path:
    return dest / "manifest.json"


def _load_manifest(dest: Path) -> dict:
    path = _manifest_path(dest)
    if path.exists():
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    return {}


def _save_manifest(dest: Path, manifest: dict) -> None:
    with open(_manifest_path(dest), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def fetch_dataset(name: str, dest: str | Path, registry: dict[str, dict] | None = None) -> Path:
    """Download one dataset into dest, verifying or recording its checksum.

    Returns the path of the final file. An existing file whose hash matches
    the manifest is left alone; a hash mismatch (against the manifest or a
    registry pin) is an error and the download is discarded.
    """
    registry = registry or DEFAULT_REGISTRY
    if name not in registry:
        raise ValueError(f"unknown dataset {name!r}; known: {', '.join(sorted(registry))}")
    entry = registry[name]
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    final = dest / entry["filename"]
    manifest = _load_manifest(dest)

    if final.exists():
        digest = _sha256(final)
        pinned = entry.get("sha256") or manifest.get(name, {}).get("sha256")
        if pinned and digest != pinned:
            raise ValueError(
                f"{final}: checksum mismatch (have {digest}, expected {pinned}); "
                "delete the file to refetch"
            )
        if not pinned:
            manifest[name] = {"url": entry["url"], "sha256": digest}
            _save_manifest(dest, manifest)
        logger.info("%s: already present, checksum ok", final)
        return final

    with tempfile.NamedTemporaryFile(dir=dest, delete=False) as tmp:
        tmp_path = Path(tmp.name)
    try:
        logger.info("fetching %s -> %s", entry["url"], final)
        with urllib.request.urlopen(entry["url"]) as resp, open(tmp_path, "wb") as out:
            shutil.copyfileobj(resp, out)
        if "zip_member" in entry:
            extracted = tmp_path.with_suffix(".extracted")
            with zipfile.ZipFile(tmp_path) as zf, open(extracted, "wb") as out:
                with zf.open(entry["zip_member"]) as member:
                    shutil.copyfileobj(member, out)
            tmp_path.unlink()
            tmp_path = extracted
        digest = _sha256(tmp_path)
        expected = entry.get("sha256") or manifest.get(name, {}).get("sha256")
        if expected and digest != expected:
            raise ValueError(
                f"{entry['url']}: checksum mismatch (got {digest}, expected {expected})"
            )
        tmp_path.replace(final)
        manifest[name] = {"url": entry["url"], "sha256": digest}
        _save_manifest(dest, manifest)
        return final
    finally:
        tmp_path.unlink(missing_ok=True)


def fetch_all(
    dest: str | Path,
    names: list[str] | None = None,
    registry: dict[str, dict] | None = None,
) -> list[Path]:
    """Fetch the named datasets (the eight similarity sets by default)."""
    out = []
    for name in names or SIMILARITY_NAMES:
        out.append(fetch_dataset(name, dest, registry))
    return out
