"""Digital Ecosystem simulator with a distributed-registry baseline."""
from .config import ConfigError, ScenarioConfig, parse_config
from .evolution import (EvolutionResult, GaConfig, adjusted_fitness, crossover_one_point,
                        evolve_request, fitness, mutate, population_size,
                        select_next_generation)
from .habitat import Ecosystem, MigrationOutcome, hebbian_update, select_migration_targets
from .harness import StepRecord, aggregate, detect_crossover, match_percent, run_scenario
from .model import Agent, AgentSequence, Request, attr_distance, derive_stream, min_dist
from .soa import Registry, SoaResponse, soa_respond

__version__ = "0.1.0"
