#!/usr/bin/env python3
# Copyright 2026 The wicount Authors
# SPDX-License-Identifier: Apache-2.0
"""Export torchvision backbone weights to safetensors for wicount.

  export_pretrained.py --arch convnext_tiny --out weights/convnext_tiny.safetensors

ImageNet weights come from torchvision's cache (downloaded on first use).
`--weights random --seed N` exports a seeded random initialisation instead,
and `--reference FILE` additionally stores a fixed input and the pooled
features torchvision computes for it, which the test suite uses to check the
C++ architectures against torchvision.
"""

import argparse
import sys

import torch
import torchvision
from safetensors.torch import save_file

ARCHS = {
    "convnext_tiny": (torchvision.models.convnext_tiny, "ConvNeXt_Tiny_Weights"),
    "resnet18": (torchvision.models.resnet18, "ResNet18_Weights"),
    "mobilenet_v3_small": (torchvision.models.mobilenet_v3_small, "MobileNet_V3_Small_Weights"),
}


def pooled_features(arch, model, x):
    if arch == "resnet18":
        m = model
        x = m.maxpool(m.relu(m.bn1(m.conv1(x))))
        x = m.layer4(m.layer3(m.layer2(m.layer1(x))))
        return torch.flatten(m.avgpool(x), 1)
    if arch == "mobilenet_v3_small":
        return torch.flatten(model.avgpool(model.features(x)), 1)
    x = model.avgpool(model.features(x))
    return torch.flatten(model.classifier[0](x), 1)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--arch", required=True, choices=sorted(ARCHS))
    p.add_argument("--out", required=True)
    p.add_argument("--weights", choices=["imagenet", "random"], default="imagenet")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reference", help="also write a reference input/features file")
    p.add_argument("--resolution", type=int, default=64)
    args = p.parse_args()

    ctor, enum_name = ARCHS[args.arch]
    torch.manual_seed(args.seed)
    if args.weights == "imagenet":
        weights = getattr(torchvision.models, enum_name).IMAGENET1K_V1
        model = ctor(weights=weights)
    else:
        model = ctor(weights=None)
    model.eval()

    state = {k: v.detach().contiguous() for k, v in model.state_dict().items()}
    # BatchNorm's num_batches_tracked is bookkeeping only.
    state = {k: v for k, v in state.items() if not k.endswith("num_batches_tracked")}
    save_file(state, args.out)
    print(f"wrote {len(state)} tensors to {args.out}")

    if args.reference:
        g = torch.Generator().manual_seed(args.seed + 1)
        x = torch.randn(2, 3, args.resolution, args.resolution, generator=g)
        with torch.no_grad():
            feats = pooled_features(args.arch, model, x)
        save_file({"input": x.contiguous(), "features": feats.contiguous()}, args.reference)
        print(f"wrote reference {tuple(feats.shape)} to {args.reference}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
