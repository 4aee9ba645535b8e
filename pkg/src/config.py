"""
Chargement et validation de la configuration de l'application.

Ce module lit config/config.yaml, applique les surcharges des variables
d'environnement (fichier .env à la racine du projet) et valide le tout
avec Pydantic.
"""
import os
import yaml
from pathlib import Path
from typing import Optional, Dict, Any

from dotenv import load_dotenv
from pydantic import BaseModel, Field

from src.core.models import BaselineParams, NumericsOptions, PlannerConfig

# Charger le fichier .env se trouvant à la racine du projet
dotenv_path = Path(__file__).parent.parent / ".env"
if dotenv_path.exists():
    load_dotenv(dotenv_path=dotenv_path)


class AppConfig(BaseModel):
    name: str = "avp-planner"
    output_dir: Path = Path("output")
    log_dir: Optional[Path] = None
    csv_precision: int = 17

class OracleSettings(BaseModel):
    n_s: int = Field(200, ge=50)
    n_v: int = Field(200, ge=50)
    v_margin: float = 1.2
    tolerance_cells: int = 2
    relative_tolerance: float = 0.02

class BenchSettings(BaseModel):
    repeats: int = 10
    max_workers: int = 4
    timing_paths: int = 100

class CommandDefaults(BaseModel):
    verbose: bool = False
    seed: int = 0
    reset_logs: bool = False

class CommandsConfig(BaseModel):
    defaults: CommandDefaults = CommandDefaults()

class Settings(BaseModel):
    app: AppConfig = Field(default_factory=AppConfig)
    numerics: NumericsOptions = Field(default_factory=NumericsOptions)
    planner: PlannerConfig = Field(default_factory=PlannerConfig)
    baseline: BaselineParams = Field(default_factory=BaselineParams)
    oracle: OracleSettings = Field(default_factory=OracleSettings)
    bench: BenchSettings = Field(default_factory=BenchSettings)
    commands: CommandsConfig = Field(default_factory=CommandsConfig)

    @classmethod
    def load(cls, config_file: Path = Path(__file__).parent.parent / "config" / "config.yaml") -> "Settings":
        """
        Loads configuration from config.yaml and overrides with environment variables.
        Environment variables take precedence.
        """
        config_data: Dict[str, Any] = {}
        if config_file.exists():
            with open(config_file, 'r') as f:
                config_data = yaml.safe_load(f) or {}

        # Numerics
        if os.getenv("AVP_GRID"):
            config_data.setdefault("numerics", {})["grid"] = int(os.getenv("AVP_GRID"))
        if os.getenv("AVP_EPSILON"):
            config_data.setdefault("numerics", {})["epsilon"] = float(os.getenv("AVP_EPSILON"))

        # Planner
        if os.getenv("AVP_MAX_REPS"):
            config_data.setdefault("planner", {})["max_reps"] = int(os.getenv("AVP_MAX_REPS"))

        # Bench
        if os.getenv("AVP_MAX_WORKERS"):
            config_data.setdefault("bench", {})["max_workers"] = int(os.getenv("AVP_MAX_WORKERS"))

        # App settings
        if os.getenv("AVP_OUTPUT_DIR"):
            config_data.setdefault("app", {})["output_dir"] = os.getenv("AVP_OUTPUT_DIR")
        if os.getenv("AVP_LOG_DIR"):
            config_data.setdefault("app", {})["log_dir"] = os.getenv("AVP_LOG_DIR")

        # Commands
        if os.getenv("AVP_SEED"):
            config_data.setdefault("commands", {}).setdefault("defaults", {})["seed"] = int(os.getenv("AVP_SEED"))

        return cls(**config_data)

    # Convenience accessors used throughout the codebase
    @property
    def output_dir(self) -> Path:
        return Path(self.app.output_dir).expanduser()

    @property
    def grid(self) -> int:
        return self.numerics.grid

    @property
    def epsilon(self) -> float:
        return self.numerics.epsilon

    @property
    def seed(self) -> int:
        return self.commands.defaults.seed

# Instance globale des réglages
try:
    settings = Settings.load()
except Exception as e:
    print(f"Erreur de configuration : {e}")
    print("Veuillez vérifier votre fichier .env et config/config.yaml.")
    exit(1)
