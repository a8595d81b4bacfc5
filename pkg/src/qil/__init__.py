"""Quantum imitation learning: VQC policies trained by behavioural cloning and adversarial imitation."""

__version__ = "0.1.0"
