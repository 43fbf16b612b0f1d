import type {
	InspectDoc, MapAnswer, MapDoc, StateDoc, StepSearchResult,
} from "./types.js";

/** An ok=false answer from the controller; message comes from the server. */
export class ApiError extends Error {
	constructor(public code: string, message: string) {
		super(message);
	}
}

interface Envelope<T> {
	ok: boolean;
	result?: T;
	error?: { code: string; message: string };
}

async function unwrap<T>(response: Response): Promise<T> {
	let doc: Envelope<T>;
	try {
		doc = await response.json();
	} catch (err) {
		throw new ApiError("malformed", `unparseable response (${err})`);
	}
	if (!doc.ok || doc.result === undefined) {
		const error = doc.error ?? { code: "malformed", message: "missing error info" };
		throw new ApiError(error.code, error.message);
	}
	return doc.result;
}

export class ControllerApi {
	constructor(private base = "") {}

	private async get<T>(path: string): Promise<T> {
		return unwrap<T>(await fetch(this.base + path));
	}

	private async post<T>(path: string, body: unknown = {}): Promise<T> {
		return unwrap<T>(await fetch(this.base + path, {
			method: "POST",
			headers: { "Content-Type": "application/json" },
			body: JSON.stringify(body),
		}));
	}

	state(): Promise<StateDoc> {
		return this.get("/state");
	}

	map(): Promise<MapAnswer> {
		return this.get("/map");
	}

	inspect(side: "working" | "failing", objectId: number): Promise<InspectDoc> {
		return this.get(`/inspect/${side}/${objectId}`);
	}

	stepBoth(): Promise<StateDoc> {
		return this.post("/op/step-both");
	}

	stepToDivergence(): Promise<StepSearchResult> {
		return this.post("/op/step-to-divergence");
	}

	stepToConvergence(): Promise<StepSearchResult> {
		return this.post("/op/step-to-convergence");
	}

	restart(): Promise<StateDoc> {
		return this.post("/op/restart");
	}

	analyze(): Promise<MapDoc> {
		return this.post("/op/analyze");
	}

	goTo(eventIndex: number): Promise<StateDoc> {
		return this.post("/op/goto", { eventIndex });
	}
}
