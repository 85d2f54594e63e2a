/** Browser bootstrap: file picker wiring and service address resolution. */

import { ApiClient } from "./api.js";
import { DiagnosticConsole } from "./console.js";

function serviceBaseUrl(): string {
    const params = new URLSearchParams(window.location.search);
    return params.get("service") ?? "http://127.0.0.1:8036";
}

window.addEventListener("load", () => {
    const root = document.getElementById("app");
    if (!root) throw new Error("missing #app mount point");
    const console_ = new DiagnosticConsole(root, new ApiClient(serviceBaseUrl()));

    const input = document.createElement("input");
    input.type = "file";
    input.accept = "image/png,image/jpeg";
    input.style.display = "none";
    document.body.appendChild(input);
    console_.dom.selectImageButton.addEventListener("click", () => input.click());
    input.addEventListener("change", () => {
        const file = input.files?.[0];
        if (file) console_.selectImage(file, file.name);
    });
});
