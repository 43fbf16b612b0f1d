// Shapes served by the controller API (docs/controller-api.md).

export interface ContextDoc {
	ended: boolean;
	status: string;
	stepCount: number;
	className?: string;
	selector?: string;
	nodeType?: string;
	sourceText?: string;
	spanStart?: number;
	spanEnd?: number;
	stackDepth?: number;
}

export interface FrameDoc {
	className: string;
	selector: string;
	currentSource: string;
}

export interface SideState {
	context: ContextDoc;
	stack: FrameDoc[] | null;
}

export interface StateDoc {
	working: SideState;
	failing: SideState;
	convergent: boolean | null;
	mapAvailable: boolean;
}

export interface NavEventDoc {
	kind: "divergence" | "convergence";
	wSteps: number;
	fSteps: number;
}

export interface MapDoc {
	events: NavEventDoc[];
	terminal: string;
	wTotalSteps: number;
	fTotalSteps: number;
}

export interface MapAnswer {
	available: boolean;
	map: MapDoc | null;
}

export interface StepSearchResult {
	event: NavEventDoc | null;
	terminal: string | null;
	state: StateDoc;
}

export interface InspectDoc {
	objectId: number;
	className: string;
	fields: Record<string, string>;
}
