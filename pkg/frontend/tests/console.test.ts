/** Contract tests against a stub service with recorded responses.
 *
 * The console must render only what the service returned, enforce the
 * predict-gating invariant, open the disease dialog, and overlay the
 * returned evidence PNG. No model logic lives client-side.
 */

import { beforeEach, describe, expect, it } from "vitest";

import type { FetchLike } from "../src/api.js";
import { ApiClient } from "../src/api.js";
import { DiagnosticConsole } from "../src/console.js";
import { confidencePercent, topMargin } from "../src/state.js";
import { render } from "../src/ui.js";

// ---------------------------------------------------------------------------
// recorded service responses

const CLASSES = ["Apple Black rot", "Apple healthy", "Grape healthy", "Tomato Leaf Mold"];

const RECORDED = {
    health: { status: "ok", model_id: "pd36c-4c-deadbeef" },
    modelInfo: {
        model_id: "pd36c-4c-deadbeef",
        num_classes: 4,
        class_names: CLASSES,
        input_extent: 32,
        parameters: { trainable: 1_240_036, non_trainable: 1_920, total: 1_241_956 },
    },
    predict: {
        class_name: "Apple Black rot",
        class_index: 0,
        confidence: 0.9973,
        top_k: [
            { index: 0, class: "Apple Black rot", probability: 0.9973 },
            { index: 3, class: "Tomato Leaf Mold", probability: 0.0017 },
            { index: 1, class: "Apple healthy", probability: 0.0008 },
            { index: 2, class: "Grape healthy", probability: 0.0002 },
        ],
        latency_ms: 6.4,
        model_id: "pd36c-4c-deadbeef",
        disease_info: {
            description: "Dark circular lesions on fruit and foliage.",
            treatment: "Prune infected wood and apply fungicide at bud break.",
        },
    },
    gradcam: {
        class_index: 0,
        class_name: "Apple Black rot",
        source_layer: "conv2d_7",
        constant: false,
        heatmap_png_base64: "R0hFQVQ=",
        overlay_png_base64: "T1ZFUkxBWQ==",
        grid: [[0, 1], [0.5, 0.25]],
    },
    classInfo: {
        class_name: "Apple Black rot",
        description: "Dark circular lesions on fruit and foliage.",
        treatment: "Prune infected wood and apply fungicide at bud break.",
    },
};

function jsonResponse(data: unknown, status = 200): Response {
    return new Response(JSON.stringify(data), {
        status,
        headers: { "Content-Type": "application/json" },
    });
}

interface StubCall {
    key: string;
    className: string | null;
}

function stubService(calls: StubCall[]): FetchLike {
    return async (input, init) => {
        const path = new URL(input).pathname;
        const method = init?.method ?? "GET";
        let className: string | null = null;
        if (init?.body instanceof FormData) {
            const value = init.body.get("class_name");
            className = typeof value === "string" ? value : null;
        }
        calls.push({ key: `${method} ${path}`, className });

        if (path === "/health") return jsonResponse(RECORDED.health);
        if (path === "/model/info") return jsonResponse(RECORDED.modelInfo);
        if (path === "/predict") return jsonResponse(RECORDED.predict);
        if (path === "/gradcam") {
            if (className !== null && !CLASSES.includes(className)) {
                return jsonResponse({ detail: `unknown class '${className}'` }, 404);
            }
            const body = { ...RECORDED.gradcam };
            if (className !== null) {
                body.class_name = className;
                body.class_index = CLASSES.indexOf(className);
            }
            return jsonResponse(body);
        }
        const infoMatch = path.match(/^\/classes\/(.+)\/info$/);
        if (infoMatch) {
            const name = decodeURIComponent(infoMatch[1]);
            if (!CLASSES.includes(name)) {
                return jsonResponse({ detail: `unknown class '${name}'` }, 404);
            }
            return jsonResponse({ ...RECORDED.classInfo, class_name: name });
        }
        return jsonResponse({ detail: "not found" }, 404);
    };
}

function makeConsole(fetchFn: FetchLike) {
    const root = document.createElement("div");
    document.body.appendChild(root);
    return new DiagnosticConsole(root, new ApiClient("http://stub", fetchFn));
}

const LEAF = new Blob([new Uint8Array([137, 80, 78, 71])], { type: "image/png" });

beforeEach(() => {
    document.body.innerHTML = "";
});

// ---------------------------------------------------------------------------

describe("predict gating invariant", () => {
    it("is disabled with neither model nor image", () => {
        const ui = makeConsole(stubService([]));
        expect(ui.dom.predictButton.disabled).toBe(true);
    });

    it("stays disabled with only a model", async () => {
        const ui = makeConsole(stubService([]));
        await ui.loadModel();
        expect(ui.dom.predictButton.disabled).toBe(true);
    });

    it("stays disabled with only an image", () => {
        const ui = makeConsole(stubService([]));
        ui.selectImage(LEAF, "leaf.png");
        expect(ui.dom.predictButton.disabled).toBe(true);
    });

    it("enables once both are present", async () => {
        const ui = makeConsole(stubService([]));
        await ui.loadModel();
        ui.selectImage(LEAF, "leaf.png");
        expect(ui.dom.predictButton.disabled).toBe(false);
    });

    it("disables while a prediction is in flight", async () => {
        let release: (r: Response) => void = () => undefined;
        const gate = new Promise<Response>((resolve) => (release = resolve));
        const base = stubService([]);
        const ui = makeConsole(async (input, init) => {
            if (new URL(input).pathname === "/predict") return gate;
            return base(input, init);
        });
        await ui.loadModel();
        ui.selectImage(LEAF, "leaf.png");
        const pending = ui.runPrediction();
        expect(ui.dom.predictButton.disabled).toBe(true);
        release(jsonResponse(RECORDED.predict));
        await pending;
        expect(ui.dom.predictButton.disabled).toBe(false);
    });
});

describe("prediction rendering", () => {
    it("shows the returned class and a two-decimal percentage", async () => {
        const ui = makeConsole(stubService([]));
        await ui.loadModel();
        ui.selectImage(LEAF, "leaf.png");
        await ui.runPrediction();
        expect(ui.dom.annotation.textContent).toBe("Apple Black rot — 99.73%");
    });

    it("every rendered number traces back to the recorded response", async () => {
        const ui = makeConsole(stubService([]));
        await ui.loadModel();
        ui.selectImage(LEAF, "leaf.png");
        await ui.runPrediction();
        expect(ui.dom.annotation.textContent).toContain(
            confidencePercent(RECORDED.predict.confidence),
        );
        const expectedMargin =
            RECORDED.predict.top_k[0].probability - RECORDED.predict.top_k[1].probability;
        expect(ui.dom.marginLine.textContent).toBe(
            `top-2 margin: ${expectedMargin.toFixed(4)}`,
        );
        expect(topMargin(ui.state.prediction)).toBeCloseTo(expectedMargin, 12);
    });

    it("appends one history entry per prediction, in order", async () => {
        const ui = makeConsole(stubService([]));
        await ui.loadModel();
        ui.selectImage(LEAF, "first.png");
        await ui.runPrediction();
        ui.selectImage(LEAF, "second.png");
        await ui.runPrediction();
        expect(ui.state.history).toHaveLength(2);
        expect(ui.dom.historyList.querySelectorAll("li")).toHaveLength(2);
    });

    it("opens the disease dialog with description and treatment text", async () => {
        const ui = makeConsole(stubService([]));
        await ui.loadModel();
        ui.selectImage(LEAF, "leaf.png");
        await ui.runPrediction();
        expect(ui.dom.dialog.classList.contains("hidden")).toBe(false);
        expect(ui.dom.dialogDescription.textContent).toBe(
            RECORDED.classInfo.description,
        );
        expect(ui.dom.dialogTreatment.textContent).toBe(RECORDED.classInfo.treatment);
        ui.dom.dialogClose.click();
        expect(ui.dom.dialog.classList.contains("hidden")).toBe(true);
    });
});

describe("service failures", () => {
    it("surfaces errors in the status bar without touching the viewports", async () => {
        const base = stubService([]);
        const ui = makeConsole(async (input, init) => {
            if (new URL(input).pathname === "/predict") throw new Error("connection refused");
            return base(input, init);
        });
        await ui.loadModel();
        ui.selectImage(LEAF, "leaf.png");
        const srcBefore = ui.dom.originalImage.getAttribute("src");
        await ui.runPrediction();
        expect(ui.dom.statusBar.textContent).toContain("unreachable");
        expect(ui.dom.originalImage.getAttribute("src")).toBe(srcBefore);
        expect(ui.dom.annotation.textContent).toBe("No prediction yet");
        expect(ui.state.history).toHaveLength(0);
    });

    it("reports a down service on load", async () => {
        const ui = makeConsole(async () => {
            throw new Error("ECONNREFUSED");
        });
        await ui.loadModel();
        expect(ui.dom.healthLine.textContent).toBe("service: down");
        expect(ui.dom.predictButton.disabled).toBe(true);
    });
});

describe("evidence overlay", () => {
    it("renders the returned overlay PNG over the predicted viewport", async () => {
        const ui = makeConsole(stubService([]));
        await ui.loadModel();
        ui.selectImage(LEAF, "leaf.png");
        await ui.runPrediction();
        expect(ui.dom.overlayToggle.disabled).toBe(false);
        ui.dom.overlayToggle.checked = true;
        await ui.toggleOverlay();
        expect(ui.dom.overlayImage.classList.contains("hidden")).toBe(false);
        expect(ui.dom.overlayImage.getAttribute("src")).toBe(
            `data:image/png;base64,${RECORDED.gradcam.overlay_png_base64}`,
        );
        ui.dom.overlayToggle.checked = false;
        await ui.toggleOverlay();
        expect(ui.dom.overlayImage.classList.contains("hidden")).toBe(true);
    });

    it("asks the service for a user-chosen class (what-if)", async () => {
        const calls: StubCall[] = [];
        const ui = makeConsole(stubService(calls));
        await ui.loadModel();
        ui.selectImage(LEAF, "leaf.png");
        await ui.runPrediction();
        await ui.whatIfClass("Grape healthy");
        const gradcamCalls = calls.filter((c) => c.key === "POST /gradcam");
        expect(gradcamCalls.at(-1)?.className).toBe("Grape healthy");
        expect(ui.state.heatmap?.class_name).toBe("Grape healthy");
        expect(ui.dom.whatIfSelect.value).toBe("Grape healthy");
    });

    it("shows an inline message for an unknown class", async () => {
        const ui = makeConsole(stubService([]));
        await ui.loadModel();
        ui.selectImage(LEAF, "leaf.png");
        await ui.runPrediction();
        const before = ui.state.heatmap;
        await ui.whatIfClass("Not A Class");
        expect(ui.dom.statusBar.textContent).toContain("unknown class");
        expect(ui.state.heatmap).toBe(before);
    });
});

describe("stateless rendering", () => {
    it("re-rendering the same state reproduces the identical screen", async () => {
        const ui = makeConsole(stubService([]));
        await ui.loadModel();
        ui.selectImage(LEAF, "leaf.png");
        await ui.runPrediction();
        render(ui.dom, ui.state);
        const first = ui.dom.root.innerHTML;
        render(ui.dom, ui.state);
        expect(ui.dom.root.innerHTML).toBe(first);
    });
});

describe("screen layout", () => {
    it("has the five regions and the control buttons", () => {
        const ui = makeConsole(stubService([]));
        for (const id of ["title-bar", "tab-bar", "control-bar", "viewports", "status-bar"]) {
            expect(ui.dom.root.querySelector(`#${id}`), id).not.toBeNull();
        }
        expect(ui.dom.loadModelButton.textContent).toBe("Load Model");
        expect(ui.dom.selectImageButton.textContent).toBe("Select Image");
        expect(ui.dom.predictButton.textContent).toBe("Predict");
    });

    it("switches between diagnose and history tabs", () => {
        const ui = makeConsole(stubService([]));
        ui.dom.tabHistory.click();
        expect(ui.dom.historyPanel.classList.contains("hidden")).toBe(false);
        expect(ui.dom.diagnosePanel.classList.contains("hidden")).toBe(true);
        ui.dom.tabDiagnose.click();
        expect(ui.dom.diagnosePanel.classList.contains("hidden")).toBe(false);
    });
});
