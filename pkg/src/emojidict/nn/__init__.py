"""Minimal dense-tensor neural network substrate (NumPy, manual backprop)."""

from .gradcheck import grad_check
from .layers import (BiLSTM, CharCNN, Conv1d, Dense, Embedding, FeatureAttention, LSTM, TemporalAttention,
                     maxpool1d, maxpool1d_backward, relu, relu_backward, sigmoid, softmax)
from .losses import class_weight, cross_entropy, weighted_bce, weighted_bce_logits
from .optim import Adam, adam_step
from .params import ParamStore, load_glove, param_count
from .serialize import (QuantizedBlob, dequantize8, dump_weights, load_weights, parse_weights, quantize8,
                        quantize_tensor, save_weights)

__all__ = [
    "Adam", "BiLSTM", "CharCNN", "Conv1d", "Dense", "Embedding", "FeatureAttention", "LSTM", "ParamStore",
    "QuantizedBlob", "TemporalAttention", "adam_step", "class_weight", "cross_entropy", "dequantize8",
    "dump_weights", "grad_check", "load_glove", "load_weights", "maxpool1d", "maxpool1d_backward",
    "param_count", "parse_weights", "quantize8", "quantize_tensor", "relu", "relu_backward", "save_weights",
    "sigmoid", "softmax", "weighted_bce", "weighted_bce_logits",
]
