"""Drive the HTTP service end to end, in process, without opening a port.

Saves a model to the binary weight container, builds the FastAPI app from
the file plus a small knowledge base, and exercises every endpoint the
diagnostic console consumes.
"""

import io
import json
import tempfile
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient
from PIL import Image

from pd36c import build_pd36c, save_weights
from pd36c.server import build_service

workdir = Path(tempfile.mkdtemp(prefix="pd36c_demo_"))

# a fresh 4-class model at 32x32 keeps the demo quick
spec, store = build_pd36c(num_classes=4, init_seed=2, input_extent=32)
classes = ["Apple Black rot", "Apple healthy", "Grape healthy", "Tomato Leaf Mold"]
weights = workdir / "demo.pd36"
save_weights(spec, store, weights, class_names=classes)

kb = workdir / "kb.json"
kb.write_text(json.dumps({
    "Apple Black rot": {
        "description": "Dark, circular lesions that expand on fruit and leaves.",
        "treatment": "Remove mummified fruit, prune infected wood, spray at bud break.",
    },
}))

client = TestClient(build_service(weights, kb))

print("GET /health        ->", client.get("/health").json())
info = client.get("/model/info").json()
print("GET /model/info    ->", {k: info[k] for k in ("model_id", "num_classes", "parameters")})

# upload an image exactly the way the browser console does
rng = np.random.default_rng(0)
buf = io.BytesIO()
Image.fromarray(rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)).save(buf, "PNG")
files = {"image": ("leaf.png", buf.getvalue(), "image/png")}

pred = client.post("/predict", files=files).json()
print(f"POST /predict      -> {pred['class_name']} "
      f"({pred['confidence']:.2%}) in {pred['latency_ms']:.1f} ms")

cam = client.post("/gradcam", files=files, data={"class_name": pred["class_name"]}).json()
print(f"POST /gradcam      -> {len(cam['grid'])}x{len(cam['grid'][0])} grid, "
      f"overlay png {len(cam['overlay_png_base64'])} b64 chars")

disease = client.get(f"/classes/{classes[0]}/info").json()
print(f"GET /classes/.../info -> {disease['treatment'][:48]}...")

bad = client.post("/predict", files={"image": ("x.txt", b"not an image", "text/plain")})
print(f"bad upload         -> HTTP {bad.status_code}: {bad.json()['detail'][:40]}...")
