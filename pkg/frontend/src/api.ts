/** Typed client for the pd36c inference service. */

export interface TopKEntry {
    index: number;
    class: string;
    probability: number;
}

export interface DiseaseInfo {
    description: string;
    treatment: string;
}

export interface PredictResponse {
    class_name: string;
    class_index: number;
    confidence: number;
    top_k: TopKEntry[];
    latency_ms: number;
    model_id: string;
    disease_info: DiseaseInfo | null;
}

export interface ModelInfo {
    model_id: string;
    num_classes: number;
    class_names: string[];
    input_extent: number;
    parameters: { trainable: number; non_trainable: number; total: number };
}

export interface GradCamResponse {
    class_index: number;
    class_name: string;
    source_layer: string;
    constant: boolean;
    heatmap_png_base64: string;
    overlay_png_base64: string;
    grid: number[][];
}

export interface ClassInfoResponse {
    class_name: string;
    description: string;
    treatment: string;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
    constructor(readonly status: number, message: string) {
        super(message);
    }
}

/**
 * Thin wrapper over fetch; every console number comes out of one of these
 * calls, the client computes nothing itself.
 */
export class ApiClient {
    constructor(
        private readonly baseUrl: string,
        private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        let response: Response;
        try {
            response = await this.fetchFn(this.baseUrl + path, init);
        } catch (err) {
            throw new ApiError(0, `service unreachable: ${String(err)}`);
        }
        if (!response.ok) {
            let detail = response.statusText;
            try {
                const body = (await response.json()) as { detail?: string };
                if (body.detail) detail = body.detail;
            } catch {
                /* non-JSON error body */
            }
            throw new ApiError(response.status, detail);
        }
        return (await response.json()) as T;
    }

    health(): Promise<{ status: string; model_id?: string }> {
        return this.request("/health");
    }

    modelInfo(): Promise<ModelInfo> {
        return this.request("/model/info");
    }

    predict(image: Blob, filename: string): Promise<PredictResponse> {
        const form = new FormData();
        form.append("image", image, filename);
        return this.request("/predict", { method: "POST", body: form });
    }

    gradcam(image: Blob, filename: string, className?: string): Promise<GradCamResponse> {
        const form = new FormData();
        form.append("image", image, filename);
        if (className !== undefined) form.append("class_name", className);
        return this.request("/gradcam", { method: "POST", body: form });
    }

    classInfo(name: string): Promise<ClassInfoResponse> {
        return this.request(`/classes/${encodeURIComponent(name)}/info`);
    }
}
