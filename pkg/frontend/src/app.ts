import { ApiError, ControllerApi } from "./api.js";
import type { MapAnswer, StateDoc } from "./types.js";
import { renderErrorBanner, renderMap, renderPane, renderStatusArea } from "./view.js";

const OPERATIONS: Array<{ id: string; label: string }> = [
	{ id: "step-both", label: "Step both" },
	{ id: "step-to-divergence", label: "Step to next divergence" },
	{ id: "step-to-convergence", label: "Step to next convergence" },
	{ id: "analyze", label: "Analyze executions" },
	{ id: "restart", label: "Restart" },
	{ id: "goto", label: "Go to" },
];

export class App {
	private workingPane: HTMLElement;
	private failingPane: HTMLElement;
	private statusArea: HTMLElement;
	private operations: HTMLElement;
	private mapArea: HTMLElement;
	private toast: HTMLElement;
	private buttons = new Map<string, HTMLButtonElement>();
	private selectedEvent: number | null = null;
	/** resolves when the in-flight operation (if any) has settled */
	pending: Promise<void> = Promise.resolve();
	private busy = false;

	constructor(private root: HTMLElement, private api: ControllerApi) {
		const doc = root.ownerDocument;
		root.textContent = "";
		const make = (className: string, parent: Element = root) => {
			const node = doc.createElement("div");
			node.className = className;
			parent.appendChild(node);
			return node;
		};
		const wCol = make("pane working-pane");
		const fCol = make("pane failing-pane");
		const control = make("control-zone");
		const wTitle = doc.createElement("h2");
		wTitle.textContent = "working execution";
		wCol.appendChild(wTitle);
		this.workingPane = make("pane-body", wCol);
		const fTitle = doc.createElement("h2");
		fTitle.textContent = "failing execution";
		fCol.appendChild(fTitle);
		this.failingPane = make("pane-body", fCol);
		this.statusArea = make("status-area", control);
		this.operations = make("operations-area", control);
		this.mapArea = make("map-area", control);
		this.toast = make("toast", control);
		this.buildOperations();
	}

	private buildOperations(): void {
		const doc = this.root.ownerDocument;
		for (const op of OPERATIONS) {
			const button = doc.createElement("button");
			button.textContent = op.label;
			button.dataset.op = op.id;
			button.addEventListener("click", () => this.runOperation(op.id));
			this.operations.appendChild(button);
			this.buttons.set(op.id, button);
		}
	}

	start(): Promise<void> {
		this.pending = this.refresh();
		return this.pending;
	}

	runOperation(id: string): Promise<void> {
		if (this.busy) return this.pending;
		this.pending = this.performOperation(id);
		return this.pending;
	}

	activateMapRow(index: number): Promise<void> {
		if (this.busy) return this.pending;
		this.selectedEvent = index;
		this.pending = this.performOperation("goto");
		return this.pending;
	}

	private async performOperation(id: string): Promise<void> {
		this.busy = true;
		for (const button of this.buttons.values()) button.disabled = true;
		try {
			await this.dispatch(id);
			this.toast.textContent = "";
		} catch (err) {
			this.toast.textContent = err instanceof ApiError
				? err.message
				: `request failed: ${err}`;
		} finally {
			// always refetch: the op may have advanced things before failing
			try {
				await this.refresh();
			} finally {
				this.busy = false;
				for (const button of this.buttons.values()) button.disabled = false;
			}
		}
	}

	private async dispatch(id: string): Promise<void> {
		switch (id) {
			case "step-both":
				await this.api.stepBoth();
				break;
			case "step-to-divergence":
				await this.api.stepToDivergence();
				break;
			case "step-to-convergence":
				await this.api.stepToConvergence();
				break;
			case "analyze":
				await this.api.analyze();
				break;
			case "restart":
				await this.api.restart();
				break;
			case "goto":
				if (this.selectedEvent === null) {
					throw new ApiError("precondition", "select a map row first");
				}
				await this.api.goTo(this.selectedEvent);
				break;
			default:
				throw new ApiError("bad-request", `unknown operation ${id}`);
		}
	}

	async refresh(): Promise<void> {
		let state: StateDoc;
		let mapAnswer: MapAnswer;
		try {
			state = await this.api.state();
			mapAnswer = await this.api.map();
		} catch (err) {
			const message = err instanceof ApiError
				? err.message
				: `controller unreachable: ${err}`;
			renderErrorBanner(this.workingPane, message);
			renderErrorBanner(this.failingPane, message);
			return;
		}
		try {
			renderPane(this.workingPane, state.working);
			renderPane(this.failingPane, state.failing);
			renderStatusArea(this.statusArea, state);
			renderMap(this.mapArea, mapAnswer, this.selectedEvent, {
				onActivate: (index) => this.activateMapRow(index),
			});
		} catch (err) {
			// a malformed payload must show an error, never a blank pane
			renderErrorBanner(this.workingPane, `cannot render state: ${err}`);
			renderErrorBanner(this.failingPane, `cannot render state: ${err}`);
		}
	}
}
