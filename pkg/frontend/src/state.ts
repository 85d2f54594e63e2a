/** Session state and the little presentation arithmetic the console owns. */

import type { GradCamResponse, ModelInfo, PredictResponse } from "./api.js";

export interface SelectedImage {
    blob: Blob;
    name: string;
    previewUrl: string;
}

export interface HistoryEntry {
    previewUrl: string;
    className: string;
    confidence: number;
}

export class SessionState {
    modelInfo: ModelInfo | null = null;
    image: SelectedImage | null = null;
    prediction: PredictResponse | null = null;
    heatmap: GradCamResponse | null = null;
    overlayVisible = false;
    pending = false;
    statusMessage = "";
    healthText = "service: unknown";
    history: HistoryEntry[] = [];

    /** Predict is issuable only with a model AND an image, one at a time. */
    get canPredict(): boolean {
        return this.modelInfo !== null && this.image !== null && !this.pending;
    }
}

/** Confidence rendered as a percentage with two decimals, e.g. "99.73%". */
export function confidencePercent(p: number): string {
    return `${(p * 100).toFixed(2)}%`;
}

/**
 * Top-2 confidence margin c_best - c_second from the returned top-k list;
 * null until the service has supplied at least two entries.
 */
export function topMargin(prediction: PredictResponse | null): number | null {
    if (!prediction || prediction.top_k.length < 2) return null;
    return prediction.top_k[0].probability - prediction.top_k[1].probability;
}
