"""Model registry: builders, feature dimensions, and eval-time preprocessing.

Every registered model exposes its penultimate features: activations after
global pooling (CNNs) or the class token (DeiT), i.e. the layer feeding
the removed classifier head.  `EXPECTED_DIMS` is the authoritative
feature-width table for the full benchmark zoo; `REGISTRY` holds the
subset that can be instantiated in this environment (torchvision and
transformers backbones, plus the in-package Inception-ResNet-v2).
bninception, nasnetamobile, and polynet have no offline backbone source
here and are therefore not registered.
"""

from dataclasses import dataclass
from typing import Callable

import torch
from torch import nn
from torchvision import models as tv_models
from torchvision import transforms

from .inception_resnet_v2 import InceptionResNetV2Features

# Feature widths of the benchmark zoo (penultimate layer per model).
EXPECTED_DIMS = {
    "alexnet": 4096,
    "vgg11": 4096,
    "vgg16": 4096,
    "bninception": 1024,
    "nasnetamobile": 1056,
    "densenet121": 1024,
    "resnet50": 2048,
    "resnet101": 2048,
    "inceptionresnetv2": 1536,
    "polynet": 2048,
    "deit-tiny": 192,
    "deit-small": 384,
}

_IMAGENET_NORM = transforms.Normalize(
    mean=[0.485, 0.456, 0.406], std=[0.229, 0.224, 0.225]
)


def _standard_transform(resize: int, crop: int, norm=_IMAGENET_NORM):
    return transforms.Compose(
        [
            transforms.Resize(resize),
            transforms.CenterCrop(crop),
            transforms.ToTensor(),
            norm,
        ]
    )


class UnknownModelError(KeyError):
    """Requested name is not in the registry."""


class FeatureDimensionError(RuntimeError):
    """Extracted feature width disagrees with the registry table."""


@dataclass(frozen=True)
class ModelSpec:
    name: str
    expected_dim: int
    build: Callable[[bool], nn.Module]  # pretrained flag -> feature module
    transform: Callable[[], object]  # eval-time preprocessing pipeline

    def __post_init__(self):
        if self.expected_dim != EXPECTED_DIMS[self.name]:
            raise FeatureDimensionError(
                f"{self.name}: spec dim {self.expected_dim} != table dim {EXPECTED_DIMS[self.name]}"
            )


class _HeadlessClassifier(nn.Module):
    """torchvision net with the final classifier Linear removed."""

    def __init__(self, net: nn.Module, head: nn.Sequential):
        super().__init__()
        self.net = net
        self.head = head

    def forward(self, x):
        return self.head(torch.flatten(self.net.avgpool(self.net.features(x)), 1))


def _alexnet_like(factory, weights_attr):
    def build(pretrained: bool) -> nn.Module:
        weights = weights_attr if pretrained else None
        net = factory(weights=weights)
        head = nn.Sequential(*list(net.classifier.children())[:-1])
        return _HeadlessClassifier(net, head)

    return build


class _PooledBackbone(nn.Module):
    def __init__(self, body: nn.Module):
        super().__init__()
        self.body = body

    def forward(self, x):
        return torch.flatten(self.body(x), 1)


def _resnet(factory, weights_attr):
    def build(pretrained: bool) -> nn.Module:
        net = factory(weights=weights_attr if pretrained else None)
        return _PooledBackbone(nn.Sequential(*list(net.children())[:-1]))

    return build


class _DenseNetFeatures(nn.Module):
    def __init__(self, net):
        super().__init__()
        self.features = net.features

    def forward(self, x):
        out = nn.functional.relu(self.features(x), inplace=True)
        return torch.flatten(nn.functional.adaptive_avg_pool2d(out, 1), 1)


def _densenet121(pretrained: bool) -> nn.Module:
    weights = tv_models.DenseNet121_Weights.IMAGENET1K_V1 if pretrained else None
    return _DenseNetFeatures(tv_models.densenet121(weights=weights))


class _DeiTClassToken(nn.Module):
    def __init__(self, model):
        super().__init__()
        self.model = model

    def forward(self, x):
        return self.model(pixel_values=x).last_hidden_state[:, 0]


def _deit(variant: str):
    hidden, heads = {"tiny": (192, 3), "small": (384, 6)}[variant]

    def build(pretrained: bool) -> nn.Module:
        from transformers import DeiTConfig, DeiTModel

        if pretrained:
            model = DeiTModel.from_pretrained(f"facebook/deit-{variant}-patch16-224")
        else:
            config = DeiTConfig(
                hidden_size=hidden,
                num_hidden_layers=12,
                num_attention_heads=heads,
                intermediate_size=hidden * 4,
                image_size=224,
                patch_size=16,
            )
            model = DeiTModel(config)
        return _DeiTClassToken(model)

    return build


def _inception_resnet_v2(pretrained: bool) -> nn.Module:
    if pretrained:
        raise UnknownModelError(
            "inceptionresnetv2 has no pretrained weight source in this environment"
        )
    return InceptionResNetV2Features()


REGISTRY = {
    "alexnet": ModelSpec(
        "alexnet",
        4096,
        _alexnet_like(tv_models.alexnet, tv_models.AlexNet_Weights.IMAGENET1K_V1),
        lambda: _standard_transform(256, 224),
    ),
    "vgg11": ModelSpec(
        "vgg11",
        4096,
        _alexnet_like(tv_models.vgg11, tv_models.VGG11_Weights.IMAGENET1K_V1),
        lambda: _standard_transform(256, 224),
    ),
    "vgg16": ModelSpec(
        "vgg16",
        4096,
        _alexnet_like(tv_models.vgg16, tv_models.VGG16_Weights.IMAGENET1K_V1),
        lambda: _standard_transform(256, 224),
    ),
    "densenet121": ModelSpec(
        "densenet121", 1024, _densenet121, lambda: _standard_transform(256, 224)
    ),
    "resnet50": ModelSpec(
        "resnet50",
        2048,
        _resnet(tv_models.resnet50, tv_models.ResNet50_Weights.IMAGENET1K_V1),
        lambda: _standard_transform(256, 224),
    ),
    "resnet101": ModelSpec(
        "resnet101",
        2048,
        _resnet(tv_models.resnet101, tv_models.ResNet101_Weights.IMAGENET1K_V1),
        lambda: _standard_transform(256, 224),
    ),
    "deit-tiny": ModelSpec(
        "deit-tiny", 192, _deit("tiny"), lambda: _standard_transform(256, 224)
    ),
    "deit-small": ModelSpec(
        "deit-small", 384, _deit("small"), lambda: _standard_transform(256, 224)
    ),
    "inceptionresnetv2": ModelSpec(
        "inceptionresnetv2",
        1536,
        _inception_resnet_v2,
        lambda: _standard_transform(
            342, 299, transforms.Normalize(mean=[0.5, 0.5, 0.5], std=[0.5, 0.5, 0.5])
        ),
    ),
}


def get_model_spec(name: str) -> ModelSpec:
    try:
        return REGISTRY[name]
    except KeyError:
        raise UnknownModelError(
            f"unknown model {name!r}; registered: {sorted(REGISTRY)}"
        ) from None
