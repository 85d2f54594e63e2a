/** Five-region screen layout and a render pass that is a pure function of
 * the session state: rendering the same state twice produces an identical
 * document, so replayed service responses reproduce identical screens. */

import { confidencePercent, SessionState, topMargin } from "./state.js";

export interface ConsoleDom {
    root: HTMLElement;
    tabDiagnose: HTMLButtonElement;
    tabHistory: HTMLButtonElement;
    loadModelButton: HTMLButtonElement;
    selectImageButton: HTMLButtonElement;
    predictButton: HTMLButtonElement;
    overlayToggle: HTMLInputElement;
    whatIfSelect: HTMLSelectElement;
    originalImage: HTMLImageElement;
    predictedImage: HTMLImageElement;
    overlayImage: HTMLImageElement;
    annotation: HTMLElement;
    marginLine: HTMLElement;
    statusBar: HTMLElement;
    healthLine: HTMLElement;
    historyList: HTMLUListElement;
    diagnosePanel: HTMLElement;
    historyPanel: HTMLElement;
    dialog: HTMLElement;
    dialogTitle: HTMLElement;
    dialogDescription: HTMLElement;
    dialogTreatment: HTMLElement;
    dialogClose: HTMLButtonElement;
}

export function buildLayout(root: HTMLElement): ConsoleDom {
    root.innerHTML = `
      <header id="title-bar" class="title-bar">Plant Disease Diagnostic Console</header>
      <nav id="tab-bar" class="tab-bar">
        <button id="tab-diagnose" class="tab active">Diagnose</button>
        <button id="tab-history" class="tab">History</button>
      </nav>
      <section id="control-bar" class="control-bar">
        <button id="load-model">Load Model</button>
        <button id="select-image">Select Image</button>
        <button id="predict" disabled>Predict</button>
        <label class="overlay-label">
          <input id="overlay-toggle" type="checkbox" disabled /> Evidence overlay
        </label>
        <label class="what-if-label">
          Evidence for:
          <select id="what-if" disabled></select>
        </label>
      </section>
      <section id="panel-diagnose">
        <div id="viewports" class="viewports">
          <figure class="viewport">
            <img id="original-image" alt="original input" />
            <figcaption>Original</figcaption>
          </figure>
          <figure class="viewport">
            <div class="stack">
              <img id="predicted-image" alt="predicted input" />
              <img id="overlay-image" class="overlay hidden" alt="class evidence overlay" />
            </div>
            <figcaption id="annotation">No prediction yet</figcaption>
            <figcaption id="margin-line" class="margin"></figcaption>
          </figure>
        </div>
      </section>
      <section id="panel-history" class="hidden">
        <ul id="history-list"></ul>
      </section>
      <footer id="status-bar" class="status-bar">
        <span id="health-line">service: unknown</span>
        <span id="status-message"></span>
      </footer>
      <div id="disease-dialog" class="dialog hidden" role="dialog" aria-modal="true">
        <div class="dialog-body">
          <h2 id="dialog-title"></h2>
          <h3>Description</h3>
          <p id="dialog-description"></p>
          <h3>Treatment</h3>
          <p id="dialog-treatment"></p>
          <button id="dialog-close">Close</button>
        </div>
      </div>
    `;
    const get = <T extends HTMLElement>(id: string) =>
        root.querySelector<T>(`#${id}`) as T;
    return {
        root,
        tabDiagnose: get("tab-diagnose"),
        tabHistory: get("tab-history"),
        loadModelButton: get("load-model"),
        selectImageButton: get("select-image"),
        predictButton: get("predict"),
        overlayToggle: get("overlay-toggle"),
        whatIfSelect: get("what-if"),
        originalImage: get("original-image"),
        predictedImage: get("predicted-image"),
        overlayImage: get("overlay-image"),
        annotation: get("annotation"),
        marginLine: get("margin-line"),
        statusBar: get("status-message"),
        healthLine: get("health-line"),
        historyList: get("history-list"),
        diagnosePanel: get("panel-diagnose"),
        historyPanel: get("panel-history"),
        dialog: get("disease-dialog"),
        dialogTitle: get("dialog-title"),
        dialogDescription: get("dialog-description"),
        dialogTreatment: get("dialog-treatment"),
        dialogClose: get("dialog-close"),
    };
}

export function render(dom: ConsoleDom, state: SessionState): void {
    dom.predictButton.disabled = !state.canPredict;
    dom.healthLine.textContent = state.healthText;
    dom.statusBar.textContent = state.statusMessage;

    if (state.image) {
        dom.originalImage.src = state.image.previewUrl;
        dom.predictedImage.src = state.image.previewUrl;
    } else {
        dom.originalImage.removeAttribute("src");
        dom.predictedImage.removeAttribute("src");
    }

    if (state.prediction) {
        dom.annotation.textContent =
            `${state.prediction.class_name} — ${confidencePercent(state.prediction.confidence)}`;
        const margin = topMargin(state.prediction);
        dom.marginLine.textContent =
            margin === null ? "" : `top-2 margin: ${margin.toFixed(4)}`;
    } else {
        dom.annotation.textContent = "No prediction yet";
        dom.marginLine.textContent = "";
    }

    dom.overlayToggle.disabled = state.heatmap === null;
    dom.overlayToggle.checked = state.overlayVisible;
    if (state.heatmap && state.overlayVisible) {
        dom.overlayImage.src = `data:image/png;base64,${state.heatmap.overlay_png_base64}`;
        dom.overlayImage.classList.remove("hidden");
    } else {
        dom.overlayImage.classList.add("hidden");
    }

    const classNames = state.modelInfo ? state.modelInfo.class_names : [];
    dom.whatIfSelect.disabled = state.prediction === null;
    const options = classNames
        .map((name) => `<option value="${name.replace(/"/g, "&quot;")}">${name}</option>`)
        .join("");
    if (dom.whatIfSelect.innerHTML !== options) {
        dom.whatIfSelect.innerHTML = options;
    }
    if (state.heatmap) {
        dom.whatIfSelect.value = state.heatmap.class_name;
    } else if (state.prediction) {
        dom.whatIfSelect.value = state.prediction.class_name;
    }

    dom.historyList.innerHTML = state.history
        .map(
            (entry) =>
                `<li><img src="${entry.previewUrl}" class="thumb" alt="history thumbnail" />` +
                `<span>${entry.className}</span>` +
                `<span>${confidencePercent(entry.confidence)}</span></li>`,
        )
        .join("");
}

export function showDialog(
    dom: ConsoleDom, title: string, description: string, treatment: string,
): void {
    dom.dialogTitle.textContent = title;
    dom.dialogDescription.textContent = description;
    dom.dialogTreatment.textContent = treatment;
    dom.dialog.classList.remove("hidden");
}

export function hideDialog(dom: ConsoleDom): void {
    dom.dialog.classList.add("hidden");
}

export function showTab(dom: ConsoleDom, tab: "diagnose" | "history"): void {
    const diagnose = tab === "diagnose";
    dom.diagnosePanel.classList.toggle("hidden", !diagnose);
    dom.historyPanel.classList.toggle("hidden", diagnose);
    dom.tabDiagnose.classList.toggle("active", diagnose);
    dom.tabHistory.classList.toggle("active", !diagnose);
}
