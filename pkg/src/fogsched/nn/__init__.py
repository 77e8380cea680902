from fogsched.nn.lstm import LstmPredictor, lstm_predict
from fogsched.nn.minimize import MinimizeResult, minimize_input
from fogsched.nn.network import ACTIVATIONS, DenseLayer, Network, Scaler
from fogsched.nn.optim import AdamW, CosineWarmRestarts, train_step

__all__ = [
    "ACTIVATIONS",
    "AdamW",
    "CosineWarmRestarts",
    "DenseLayer",
    "LstmPredictor",
    "MinimizeResult",
    "Network",
    "Scaler",
    "lstm_predict",
    "minimize_input",
    "train_step",
]
