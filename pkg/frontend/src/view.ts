import type { MapAnswer, SideState, StateDoc } from "./types.js";

// Pure DOM builders. Everything renders from the latest /state and /map
// payloads; no execution state is kept on the client.

function el(
	parent: Element, tag: string, className?: string, text?: string,
): HTMLElement {
	const node = parent.ownerDocument.createElement(tag);
	if (className) node.className = className;
	if (text !== undefined) node.textContent = text;
	parent.appendChild(node);
	return node;
}

export function renderPane(container: HTMLElement, side: SideState): void {
	container.textContent = "";
	const ctx = side.context;
	if (ctx.ended) {
		el(container, "div", `pane-status pane-${ctx.status.toLowerCase()}`,
			`${ctx.status} after ${ctx.stepCount} steps`);
		const failure = (ctx as unknown as Record<string, unknown>).failure;
		if (typeof failure === "string") {
			el(container, "div", "pane-failure", failure);
		}
		return;
	}
	el(container, "div", "pane-status",
		`${ctx.status} - step ${ctx.stepCount}, depth ${ctx.stackDepth}`);
	const node = el(container, "div", "current-node");
	el(node, "div", "node-source", ctx.sourceText ?? "");
	el(node, "div", "node-meta",
		`${ctx.className}.${ctx.selector} - ${ctx.nodeType} ` +
		`[${ctx.spanStart}:${ctx.spanEnd}]`);
	const stackBox = el(container, "div", "stack");
	el(stackBox, "div", "stack-title", "call stack");
	const list = el(stackBox, "ol", "stack-frames");
	// the controller reports frames root first; debuggers read top first
	for (const frame of [...(side.stack ?? [])].reverse()) {
		el(list, "li", "stack-frame",
			`${frame.className}.${frame.selector} - ${frame.currentSource}`);
	}
}

export function renderStatusArea(container: HTMLElement, state: StateDoc): void {
	container.textContent = "";
	el(container, "div", "status-title", "current nodes");
	if (state.convergent === null) {
		el(container, "div", "status-value status-ended", "ended");
	} else if (state.convergent) {
		el(container, "div", "status-value status-equal", "equal");
	} else {
		el(container, "div", "status-value status-different", "different");
	}
}

export interface MapHandlers {
	onActivate(index: number): void;
}

export function renderMap(
	container: HTMLElement, answer: MapAnswer, selected: number | null,
	handlers: MapHandlers,
): void {
	container.textContent = "";
	el(container, "div", "map-title", "navigation map");
	if (!answer.available || !answer.map) {
		el(container, "div", "map-empty",
			"run Analyze executions to fill the map");
		return;
	}
	const map = answer.map;
	if (map.events.length === 0) {
		el(container, "div", "map-empty", "no divergences found");
	} else {
		const table = el(container, "table", "map-table");
		const head = el(el(table, "thead"), "tr");
		el(head, "th", undefined, "event");
		el(head, "th", undefined, "working steps");
		el(head, "th", undefined, "failing steps");
		const body = el(table, "tbody");
		map.events.forEach((event, index) => {
			const row = el(body, "tr", `map-row map-${event.kind}`);
			if (index === selected) row.classList.add("map-selected");
			row.dataset.index = String(index);
			el(row, "td", undefined, event.kind);
			el(row, "td", "num", String(event.wSteps));
			el(row, "td", "num", String(event.fSteps));
			row.addEventListener("click", () => handlers.onActivate(index));
		});
	}
	el(container, "div", "map-terminal",
		`${map.terminal} - working ${map.wTotalSteps} steps, ` +
		`failing ${map.fTotalSteps} steps`);
}

export function renderErrorBanner(container: HTMLElement, message: string): void {
	container.textContent = "";
	el(container, "div", "error-banner", message);
}
