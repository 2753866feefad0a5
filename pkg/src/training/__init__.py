from .config import (
    RunConfig, ScheduleConfig, TrainConfig, DataConfig, IoConfig, PRESETS, RESOLVED_CONFIG_NAME,
    load_config, from_preset, apply_overrides, apply_ini_text, config_from_text,
)
from .data_generator import DataGenerator
from .trainer import Trainer, TrainedModel, load_trained_model, checkpoint_name, LOG_NAME

__all__ = [
    'RunConfig', 'ScheduleConfig', 'TrainConfig', 'DataConfig', 'IoConfig', 'PRESETS',
    'RESOLVED_CONFIG_NAME', 'load_config', 'from_preset', 'apply_overrides', 'apply_ini_text',
    'config_from_text', 'DataGenerator', 'Trainer', 'TrainedModel', 'load_trained_model',
    'checkpoint_name', 'LOG_NAME',
]
