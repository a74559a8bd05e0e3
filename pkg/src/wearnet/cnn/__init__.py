"""A small numpy CNN engine with exact backpropagation."""

from .layers import (avgpool_backward, avgpool_forward, conv2d_backward, conv2d_forward,
                     fc_backward, fc_forward, maxpool_backward, maxpool_forward, relu_backward,
                     relu_forward, softmax, softmax_cross_entropy)
from .model import (AvgPool, Conv, Dense, LayerSpec, MaxPool, Model, ModelSpec, ReLU,
                    SoftmaxOutput, alexnet_mod, build_preset, checkpoint_bytes, init_params,
                    lenet5, lenet5_wen, load_checkpoint, model_from_bytes, model_name,
                    save_checkpoint)
from .train import SGD, Adam, TrainConfig, fit, predict, prepare_batch, train_step
