"""Wearable muscle-signal teleoperation stack.

Subpackages: signal conditioning (signals, traces), synthetic data (synth),
the CNN-LSTM classifier (classifier), wearable-side control (control), the
lossy radio link (link), the robot/world simulator (sim) and the experiment
harness with CLI and WebSocket server (harness).
"""

__version__ = "0.1.0"
