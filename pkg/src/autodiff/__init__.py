from .tensor import (
    Tensor, Parameter, as_tensor, no_grad, precision,
    get_default_dtype, set_default_dtype, is_grad_enabled,
)
from .ops import elementwise, concat, pad2d, upsample_nearest2x, atan2, hypot, wrap_angle
from .conv import conv2d, depthwise_conv2d
from .module import Module
from .optim import Adam, AdamState, adam_step
from .gradcheck import check_gradients, numerical_gradient, relative_error

__all__ = [
    'Tensor', 'Parameter', 'as_tensor', 'no_grad', 'precision',
    'get_default_dtype', 'set_default_dtype', 'is_grad_enabled',
    'elementwise', 'concat', 'pad2d', 'upsample_nearest2x',
    'atan2', 'hypot', 'wrap_angle', 'conv2d', 'depthwise_conv2d',
    'Module', 'Adam', 'AdamState', 'adam_step',
    'check_gradients', 'numerical_gradient', 'relative_error',
]
