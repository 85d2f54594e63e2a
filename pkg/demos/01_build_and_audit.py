"""Build the classifier and walk through its parameter audit.

The model is a four-block convolutional network: filters double every
block (32 -> 64 -> 128 -> 256, two convolutions per block), every
convolution is followed by batch norm and ReLU, and every block ends in a
2x2 max pool. The head is global average pooling, a 256-unit dense layer,
and a softmax output. Convolutions carry no bias; batch norm's beta plays
that role, which is what makes the first conv exactly 3*3*3*32 = 864
parameters.
"""

import numpy as np

from pd36c import build_pd36c, format_audit, param_audit, shape_trace

spec, store = build_pd36c(num_classes=38, init_seed=0)

# The audit reproduces the reference layer table exactly.
report = param_audit(spec, store)
print(format_audit(report))
print()
print(f"raw float32 payload: {report.payload_bytes:,} bytes "
      f"(~{report.payload_bytes / 2**20:.2f} MiB)")

# Conv layers dominate the budget; the hidden dense layer is tiny thanks to
# global average pooling (a flatten of 14x14x256 would need 12.8M weights).
conv_total = sum(r.params for r in report.rows if r.type_name == "Conv2D")
dense_hidden = next(r.params for r in report.rows if r.name == "dense")
print(f"conv share:  {conv_total / report.total:8.2%}")
print(f"dense share: {dense_hidden / report.total:8.2%}")
print()

# The spatial chain halves four times: 224 -> 112 -> 56 -> 28 -> 14.
print("spatial chain at 224x224 input:")
for name, shape in shape_trace(spec, 224):
    if name.startswith("max_pooling") or name == "conv2d":
        print(f"  {name:<18} {shape}")
print()

# The head is resolution-independent: any extent divisible by 16 works and
# the parameter count never changes.
for extent in (16, 64, 224):
    trace = dict(shape_trace(spec, extent))
    audit = param_audit(spec, store, input_hw=extent)
    print(f"input {extent:>3}: final maps {trace['max_pooling2d_3']}, "
          f"total params {audit.total:,}")

# A two-class variant only swaps the output head: 256*2 + 2 = 514.
spec2, store2 = build_pd36c(num_classes=2, init_seed=0)
head = next(r for r in param_audit(spec2, store2).rows if r.name == "predictions")
print(f"\n2-class head: {head.params} parameters (vs 9,766 for 38 classes)")
assert np.int64(head.params) == 514
