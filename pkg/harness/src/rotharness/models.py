"""The autoencoder and digit classifier.

Architectures follow the reference protocol exactly: a 784-32-784 AE (ReLU
encoder, sigmoid decoder, binary cross-entropy, Adam) and a small CNN
(conv 32@3x3, maxpool 2x2, conv 64@3x3, maxpool 2x2, dropout 0.5, 10-way
softmax head trained with categorical cross-entropy and Adam).
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

LATENT_DIM = 32


class Autoencoder(nn.Module):
    def __init__(self):
        super().__init__()
        self.encoder = nn.Linear(784, LATENT_DIM)
        self.decoder = nn.Linear(LATENT_DIM, 784)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        return torch.relu(self.encoder(x))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.decoder(self.encode(x)))


class DigitCNN(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(1, 32, kernel_size=3)
        self.conv2 = nn.Conv2d(32, 64, kernel_size=3)
        self.pool = nn.MaxPool2d(2)
        self.dropout = nn.Dropout(0.5)
        self.head = nn.Linear(64 * 5 * 5, 10)  # 28 -> 26 -> 13 -> 11 -> 5

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.pool(torch.relu(self.conv1(x)))
        x = self.pool(torch.relu(self.conv2(x)))
        x = self.dropout(torch.flatten(x, 1))
        return self.head(x)  # logits; softmax lives in the loss


def _batches(n: int, batch_size: int, generator: torch.Generator):
    order = torch.randperm(n, generator=generator)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def train_autoencoder(
    images: np.ndarray, epochs: int, batch_size: int, seed: int
) -> tuple[Autoencoder, list[float]]:
    """Train on flattened [0,1] images; returns the model and per-epoch loss."""
    torch.manual_seed(seed)
    model = Autoencoder()
    optimizer = torch.optim.Adam(model.parameters())
    loss_fn = nn.BCELoss()
    x = torch.from_numpy(images.reshape(len(images), 784).astype(np.float32))
    generator = torch.Generator().manual_seed(seed)
    history = []
    for _ in range(epochs):
        model.train()
        total, count = 0.0, 0
        for batch in _batches(len(x), batch_size, generator):
            optimizer.zero_grad()
            loss = loss_fn(model(x[batch]), x[batch])
            loss.backward()
            optimizer.step()
            total += loss.item() * len(batch)
            count += len(batch)
        epoch_loss = total / count
        if not np.isfinite(epoch_loss):
            raise RuntimeError(f"autoencoder diverged (non-finite loss, seed={seed})")
        history.append(epoch_loss)
    return model, history


def encode_images(model: Autoencoder, images: np.ndarray) -> np.ndarray:
    x = torch.from_numpy(images.reshape(len(images), 784).astype(np.float32))
    model.eval()
    with torch.no_grad():
        out = []
        for start in range(0, len(x), 1024):
            out.append(model.encode(x[start : start + 1024]).numpy())
    return np.concatenate(out) if out else np.zeros((0, LATENT_DIM), dtype=np.float32)


def train_cnn(
    images: np.ndarray,
    labels: np.ndarray,
    epochs: int,
    batch_size: int,
    seed: int,
    init_state: dict | None = None,
) -> DigitCNN:
    """Train a classifier; ``init_state`` warm-starts fine-tuning runs."""
    torch.manual_seed(seed)
    model = DigitCNN()
    if init_state is not None:
        model.load_state_dict(init_state)
    optimizer = torch.optim.Adam(model.parameters())
    loss_fn = nn.CrossEntropyLoss()
    x = torch.from_numpy(images.astype(np.float32)).unsqueeze(1)
    y = torch.from_numpy(labels.astype(np.int64))
    generator = torch.Generator().manual_seed(seed)
    for _ in range(epochs):
        model.train()
        for batch in _batches(len(x), batch_size, generator):
            optimizer.zero_grad()
            loss = loss_fn(model(x[batch]), y[batch])
            loss.backward()
            optimizer.step()
            if not torch.isfinite(loss):
                raise RuntimeError(f"classifier diverged (non-finite loss, seed={seed})")
    return model


def predict(model: DigitCNN, images: np.ndarray) -> np.ndarray:
    x = torch.from_numpy(images.astype(np.float32)).unsqueeze(1)
    model.eval()
    with torch.no_grad():
        out = []
        for start in range(0, len(x), 512):
            out.append(model(x[start : start + 512]).argmax(dim=1).numpy())
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)


def accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    return float((predictions == labels).mean()) if len(labels) else float("nan")
