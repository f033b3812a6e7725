"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(SimulationError):
    """A static definition (store, table, machine, config value) is invalid."""


class StateError(SimulationError):
    """An operation was applied in a runtime state that cannot accept it."""


class DeadAgentError(StateError):
    """An operation was attempted on a dead agent."""


class MachineDefinitionError(ConfigurationError):
    """A state machine definition failed structural validation."""


class ValidationError(ConfigurationError):
    """Config file validation failure. Carries every problem found, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems) or "invalid configuration")
