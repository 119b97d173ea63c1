"""JPEG partial decoding to DCT coefficient tensors, DCT-input ResNet-50
variants with learned channel reduction and stage skipping, and an exact
MAC/parameter complexity analyzer."""

__version__ = "0.1.0"
