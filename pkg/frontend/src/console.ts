/** Controller: wires the session state, the service client, and the DOM.
 *
 * Every displayed number is copied from a service response (the one
 * exception, the top-2 margin, is the difference of two returned top-k
 * probabilities). Errors land in the status bar and never clear the
 * viewports. At most one prediction is in flight at a time.
 */

import { ApiClient, ApiError } from "./api.js";
import { SessionState } from "./state.js";
import {
    buildLayout,
    ConsoleDom,
    hideDialog,
    render,
    showDialog,
    showTab,
} from "./ui.js";

function previewUrlFor(blob: Blob): string {
    if (typeof URL !== "undefined" && typeof URL.createObjectURL === "function") {
        try {
            return URL.createObjectURL(blob);
        } catch {
            /* some DOM shims expose the symbol but not blob support */
        }
    }
    return "data:,selected-image";
}

export class DiagnosticConsole {
    readonly state = new SessionState();
    readonly dom: ConsoleDom;

    constructor(root: HTMLElement, private readonly api: ApiClient) {
        this.dom = buildLayout(root);
        this.dom.tabDiagnose.addEventListener("click", () => showTab(this.dom, "diagnose"));
        this.dom.tabHistory.addEventListener("click", () => showTab(this.dom, "history"));
        this.dom.loadModelButton.addEventListener("click", () => void this.loadModel());
        this.dom.predictButton.addEventListener("click", () => void this.runPrediction());
        this.dom.dialogClose.addEventListener("click", () => hideDialog(this.dom));
        this.dom.overlayToggle.addEventListener("change", () => void this.toggleOverlay());
        this.dom.whatIfSelect.addEventListener("change", () =>
            void this.whatIfClass(this.dom.whatIfSelect.value),
        );
        render(this.dom, this.state);
    }

    private report(message: string): void {
        this.state.statusMessage = message;
        render(this.dom, this.state);
    }

    /** Connect to the service and read the model card. */
    async loadModel(): Promise<void> {
        try {
            const health = await this.api.health();
            const info = await this.api.modelInfo();
            this.state.modelInfo = info;
            this.state.healthText = `service: ${health.status} | model: ${info.model_id}`;
            this.report(`model loaded (${info.num_classes} classes)`);
        } catch (err) {
            this.state.healthText = "service: down";
            this.report(err instanceof ApiError ? err.message : String(err));
        }
    }

    /** Stage an image for diagnosis (called by the file-picker wiring). */
    selectImage(blob: Blob, name: string): void {
        this.state.image = { blob, name, previewUrl: previewUrlFor(blob) };
        this.state.prediction = null;
        this.state.heatmap = null;
        this.state.overlayVisible = false;
        this.report(`selected ${name}`);
    }

    /** Upload the staged image, render the diagnosis, open the info dialog. */
    async runPrediction(): Promise<void> {
        if (!this.state.canPredict || !this.state.image) return;
        this.state.pending = true;
        this.report("predicting...");
        try {
            const prediction = await this.api.predict(
                this.state.image.blob, this.state.image.name,
            );
            this.state.prediction = prediction;
            this.state.heatmap = null;
            this.state.overlayVisible = false;
            this.state.history.push({
                previewUrl: this.state.image.previewUrl,
                className: prediction.class_name,
                confidence: prediction.confidence,
            });
            this.state.pending = false;
            this.report(`done in ${prediction.latency_ms.toFixed(1)} ms`);
            await this.openDiseaseDialog(prediction.class_name);
            await this.fetchHeatmap(prediction.class_name);
        } catch (err) {
            // keep the viewports exactly as they were
            this.state.pending = false;
            this.report(err instanceof ApiError ? err.message : String(err));
        }
    }

    private async openDiseaseDialog(className: string): Promise<void> {
        try {
            const info = await this.api.classInfo(className);
            showDialog(this.dom, info.class_name, info.description, info.treatment);
        } catch (err) {
            this.report(err instanceof ApiError ? err.message : String(err));
        }
    }

    private async fetchHeatmap(className: string): Promise<void> {
        if (!this.state.image) return;
        try {
            this.state.heatmap = await this.api.gradcam(
                this.state.image.blob, this.state.image.name, className,
            );
            render(this.dom, this.state);
        } catch (err) {
            this.report(err instanceof ApiError ? err.message : String(err));
        }
    }

    /** Re-ask for evidence for a user-chosen class (top-2 exploration). */
    async whatIfClass(className: string): Promise<void> {
        if (!this.state.prediction) return;
        try {
            this.state.heatmap = await this.api.gradcam(
                this.state.image!.blob, this.state.image!.name, className,
            );
            render(this.dom, this.state);
        } catch (err) {
            this.report(err instanceof ApiError ? err.message : String(err));
        }
    }

    async toggleOverlay(): Promise<void> {
        this.state.overlayVisible = this.dom.overlayToggle.checked;
        render(this.dom, this.state);
    }
}
