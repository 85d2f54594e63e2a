"""Class-evidence heatmaps and the per-layer feature-map grid.

The heatmap weights the final convolution's channels by the spatial mean
of the class-logit gradient, keeps the positive part, normalizes to [0, 1]
and bilinearly upsamples back to the input extent. The feature grid shows
the first 16 post-ReLU channels of all eight convolutions.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from pd36c import build_pd36c, feature_maps, grad_cam
from pd36c.explain import heatmap_to_png_bytes, overlay_to_png_bytes

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

spec, store = build_pd36c(num_classes=38, init_seed=1, input_extent=224)
rng = np.random.default_rng(5)
image = rng.uniform(0, 255, (1, 224, 224, 3)).astype(np.float32)

heat = grad_cam(spec, store, image, class_index=12)
print(f"heatmap from {heat.source_layer}: shape {heat.values.shape}, "
      f"range [{heat.values.min():.2f}, {heat.values.max():.2f}], "
      f"constant={heat.constant}")

(OUT / "heatmap.png").write_bytes(heatmap_to_png_bytes(heat))
(OUT / "heatmap_overlay.png").write_bytes(overlay_to_png_bytes(heat, image))
print(f"grayscale + overlay PNGs -> {OUT}")

# the same map for a different target class asks a different question:
# "where is the evidence FOR class 30?"
other = grad_cam(spec, store, image, class_index=30)
print(f"maps for two classes differ: {not np.allclose(heat.values, other.values)}")

# feature grid: eight rows (one per conv layer), up to 16 channels each
grid = feature_maps(spec, store, image)
print("\nper-layer post-activation maps:")
for layer in grid.layers:
    print(f"  {layer.layer:<10} {layer.maps.shape[0]:>2} maps of "
          f"{layer.maps.shape[1]}x{layer.maps.shape[2]}, "
          f"{int(layer.constant.sum())} constant")

# render the grid as one PNG: rows = layers, columns = channels at 56px
tile = 56
rows = []
for layer in grid.layers:
    cells = [
        np.asarray(
            Image.fromarray((m * 255).astype(np.uint8)).resize((tile, tile), Image.NEAREST)
        )
        for m in layer.maps
    ]
    cells += [np.zeros((tile, tile), np.uint8)] * (16 - len(cells))
    rows.append(np.concatenate(cells, axis=1))
Image.fromarray(np.concatenate(rows, axis=0)).save(OUT / "feature_grid.png")
print(f"feature grid -> {OUT / 'feature_grid.png'}")
