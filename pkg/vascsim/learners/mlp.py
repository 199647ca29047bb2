"""
Fully connected network with equal-width ReLU hidden layers and a sigmoid output,
trained on cross-entropy with mini-batch Adam
"""

import logging
from dataclasses import dataclass
from typing import Any, ClassVar, Dict, List, Tuple

import numpy as np

from ..core.types import Method
from .base_learner import BaseClassifier, LearnerParams, require_positive, sigmoid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MLPParams(LearnerParams):
    neurons_per_layer: int = 100
    n_hidden_layers: int = 1
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-3
    unstated: ClassVar[Tuple[str, ...]] = ("epochs", "batch_size", "learning_rate")

    def validate(self):
        require_positive("neurons_per_layer", self.neurons_per_layer)
        require_positive("n_hidden_layers", self.n_hidden_layers)
        require_positive("epochs", self.epochs)
        require_positive("batch_size", self.batch_size)
        require_positive("learning_rate", self.learning_rate)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, 0.0)


class MLPClassifier(BaseClassifier):
    method = Method.MLP

    def init_parameters(self, n_features: int, rng: np.random.Generator):
        """He-normal weights, zero biases"""
        widths = [n_features] + [self.params.neurons_per_layer] * self.params.n_hidden_layers + [1]
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            self.weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self.n_features = n_features

    def parameters(self) -> List[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def forward(self, X: np.ndarray) -> Tuple[np.ndarray, List[Tuple[np.ndarray, np.ndarray]]]:
        """Output logits and the (input, pre-activation) of every hidden layer"""
        memory = []
        a = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ W + b
            memory.append((a, z))
            a = relu(z)
        logits = a @ self.weights[-1] + self.biases[-1]
        memory.append((a, logits))
        return logits[:, 0], memory

    def loss(self, X: np.ndarray, y: np.ndarray) -> float:
        logits, _ = self.forward(X)
        return float(np.mean(np.logaddexp(0.0, logits) - y * logits))

    def loss_and_gradients(self, X: np.ndarray, y: np.ndarray) -> Tuple[float, List[np.ndarray]]:
        """Mean cross-entropy and its gradient, ordered like ``parameters()``"""
        logits, memory = self.forward(X)
        n = X.shape[0]
        loss = float(np.mean(np.logaddexp(0.0, logits) - y * logits))

        dz = ((sigmoid(logits) - y) / n)[:, None]
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        for layer in range(len(self.weights) - 1, -1, -1):
            a_in, _ = memory[layer]
            grads_w[layer] = a_in.T @ dz
            grads_b[layer] = dz.sum(axis=0)
            if layer > 0:
                _, z_prev = memory[layer - 1]
                dz = (dz @ self.weights[layer].T) * relu_grad(z_prev)
        return loss, [g for pair in zip(grads_w, grads_b) for g in pair]

    def fit(self, X: np.ndarray, y: np.ndarray) -> "MLPClassifier":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        self.check_training_data(X, y)
        y = y.astype(float)
        rng = np.random.default_rng(self.seed)
        self.init_parameters(X.shape[1], rng)

        beta1, beta2, eps = 0.9, 0.999, 1e-8
        params = self.parameters()
        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        step = 0
        n = X.shape[0]
        batch = min(self.params.batch_size, n)
        for epoch in range(self.params.epochs):
            order = rng.permutation(n)
            for start in range(0, n, batch):
                rows = order[start:start + batch]
                _, grads = self.loss_and_gradients(X[rows], y[rows])
                step += 1
                lr_t = self.params.learning_rate * np.sqrt(1 - beta2 ** step) / (1 - beta1 ** step)
                for p, g, m_i, v_i in zip(params, grads, m, v):
                    m_i *= beta1
                    m_i += (1 - beta1) * g
                    v_i *= beta2
                    v_i += (1 - beta2) * g * g
                    p -= lr_t * m_i / (np.sqrt(v_i) + eps)
        logger.debug(f"MLP trained for {self.params.epochs} epochs, final loss {self.loss(X, y):.4f}")
        return self

    def decision_score(self, X: np.ndarray) -> np.ndarray:
        X = self.check_input(X)
        logits, _ = self.forward(X)
        return sigmoid(logits)

    def state_dict(self) -> Dict[str, Any]:
        return {
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    def load_state(self, state: Dict[str, Any]):
        self.weights = [np.array(W, dtype=float) for W in state["weights"]]
        self.biases = [np.array(b, dtype=float) for b in state["biases"]]
        self.n_features = int(self.weights[0].shape[0])
