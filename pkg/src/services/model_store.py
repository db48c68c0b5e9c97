"""Model manifest persistence.

A manifest is a JSON document holding every fitted tree of the classifier
gate and of each class ensemble, so a reload needs nothing else. Keys are
sorted and no timestamps are written: the same model always yields the
same bytes.
"""
import json
import logging
import os
from typing import Optional

from src.errors import DataError
from src.models.personalized import PersonalizedModel


logger = logging.getLogger(__name__)

MANIFEST_FORMAT = "personalized-ensemble-manifest"
MANIFEST_VERSION = 1


def dumps_model(model: PersonalizedModel, provenance: Optional[dict] = None) -> str:
    """Serialize a model to its canonical JSON text."""
    document = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "model": model.to_dict(),
        "provenance": provenance or {},
    }
    return json.dumps(document, sort_keys=True, indent=1, allow_nan=False) + "\n"


def save_model(model: PersonalizedModel, path: str, provenance: Optional[dict] = None) -> None:
    """Write a model manifest.

    Args:
        model: Trained personalized model
        path: Destination file
        provenance: Run configuration echo (seeds, paths, flags)
    """
    text = dumps_model(model, provenance)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    logger.info(f"Saved model with {len(model.ensembles)} class ensembles to {path}")


def load_model(path: str) -> PersonalizedModel:
    """Read a manifest written by save_model.

    Raises:
        DataError: Missing file, invalid JSON or unknown format
    """
    if not os.path.exists(path):
        raise DataError(f"Model manifest not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            document = json.load(fh)
    except json.JSONDecodeError as e:
        raise DataError(f"Model manifest {path} is not valid JSON: {e}")
    if document.get("format") != MANIFEST_FORMAT:
        raise DataError(f"{path} is not a model manifest")
    if document.get("version") != MANIFEST_VERSION:
        raise DataError(f"Unsupported manifest version {document.get('version')} in {path}")
    try:
        model = PersonalizedModel.from_dict(document["model"])
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"Model manifest {path} is incomplete: {e}")
    logger.debug(f"Loaded model with classes {model.classes} from {path}")
    return model
