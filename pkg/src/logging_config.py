"""
Configuration centralisée du logging pour l'application.

Ce module met en place deux handlers :
- Un StreamHandler pour afficher les logs dans la console.
- Un RotatingFileHandler pour écrire les logs dans logs/planner.log avec rotation.
"""
import logging
import os
import shutil
from logging.handlers import RotatingFileHandler
import sys
from pathlib import Path
from typing import Optional

PROJECT_ROOT = Path(__file__).resolve().parent.parent
LOG_DIR = Path(os.getenv("AVP_LOG_DIR", PROJECT_ROOT / "logs"))
LOG_FILE_NAME = "planner.log"


class ConsoleFormatter(logging.Formatter):
    def format(self, record):
        if getattr(record, "plain", False):
            return record.getMessage()
        return super().format(record)


def purge_log_dir(log_dir: Path = LOG_DIR) -> None:
    """Supprime le répertoire de logs avant une exécution."""
    if log_dir.exists():
        shutil.rmtree(log_dir)


def setup_logging(verbose: bool = False, log_dir: Optional[Path] = None):
    """
    Configure le logger racine.

    Args:
        verbose (bool): Si True, le niveau de log de la console est réglé sur DEBUG,
                        sinon sur INFO.
        log_dir (Path): Répertoire du fichier de log (par défaut logs/ à la racine).
    """
    log_dir = Path(log_dir) if log_dir is not None else LOG_DIR
    log_dir.mkdir(parents=True, exist_ok=True)

    root = logging.getLogger()
    # Repartir d'une configuration propre (appels répétés dans une même session)
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    root.setLevel(logging.DEBUG)

    # Handler pour le fichier de log
    file_handler = RotatingFileHandler(
        log_dir / LOG_FILE_NAME, maxBytes=10 * 1024 * 1024, backupCount=5
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s", datefmt="%Y-%m-%d %H:%M:%S"
    ))
    root.addHandler(file_handler)

    # Créer un handler pour la console et le configurer
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(logging.DEBUG if verbose else logging.INFO)
    console_handler.setFormatter(ConsoleFormatter("%(levelname)s: %(message)s"))
    root.addHandler(console_handler)

    # Silence les loggers trop verbeux
    logging.getLogger("asyncio").setLevel(logging.WARNING)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("numba").setLevel(logging.WARNING)
