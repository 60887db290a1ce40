// Session flow: Instruction -> Qualification (when assigned) -> Setup ->
// Training (when due) -> Rating. The submission payload is only buildable
// once every required section is complete; the blocked state reports a
// per-section checklist.

import { SubmissionPayload, WorkerVote } from "./types.js";

export const TRAINING_INTERVAL_MINUTES = 60;

export interface SessionPlan {
    workerId: string;
    assignmentId: string;
    sectionId: string;
    itemCount: number;
    /** Qualification (hearing test) is assigned only once per worker. */
    qualificationAssigned: boolean;
    trainingIntervalMinutes?: number;
}

export interface KeyValueStore {
    get(key: string): string | null;
    set(key: string, value: string): void;
}

export const LAST_TRAINING_KEY = "ccr:last_training";

/** Training is due when none was recorded or the interval elapsed (whole seconds). */
export function trainingDue(
    lastTraining: string | null,
    now: Date,
    intervalMinutes: number = TRAINING_INTERVAL_MINUTES,
): boolean {
    if (lastTraining === null) return true;
    const elapsedSeconds = Math.floor((now.getTime() - new Date(lastTraining).getTime()) / 1000);
    return elapsedSeconds >= intervalMinutes * 60;
}

export class SessionController {
    private instructionDone = false;
    private deviceAnswers: Record<string, string> = {};
    private environmentAnswers: Record<string, string> = {};
    private hearingAnswers: Record<string, string> | null = null;
    private trainingAnswers: Record<string, string> | null = null;
    private votes = new Map<number, WorkerVote>();
    readonly trainingRequired: boolean;
    private readonly lastTraining: string | null;

    constructor(
        private readonly plan: SessionPlan,
        private readonly store: KeyValueStore,
        private readonly now: () => Date = () => new Date(),
    ) {
        this.lastTraining = store.get(LAST_TRAINING_KEY);
        this.trainingRequired = trainingDue(
            this.lastTraining,
            this.now(),
            plan.trainingIntervalMinutes ?? TRAINING_INTERVAL_MINUTES,
        );
    }

    acknowledgeInstructions(): void {
        this.instructionDone = true;
    }

    recordDeviceCheck(answers: Record<string, string>): void {
        this.deviceAnswers = { ...answers };
    }

    recordEnvironmentTest(answers: Record<string, string>): void {
        this.environmentAnswers = { ...answers };
    }

    recordHearingTest(answers: Record<string, string>): void {
        this.hearingAnswers = { ...answers };
    }

    recordTraining(answers: Record<string, string>): void {
        this.trainingAnswers = { ...answers };
        this.store.set(LAST_TRAINING_KEY, this.now().toISOString());
    }

    /** Votes stay editable until the section is submitted. */
    recordVote(itemIndex: number, rating: number, listenComplete: boolean): void {
        if (itemIndex < 0 || itemIndex >= this.plan.itemCount) {
            throw new Error(`item index ${itemIndex} outside section`);
        }
        if (rating < -3 || rating > 3 || !Number.isInteger(rating)) {
            throw new Error(`rating ${rating} is not on the CCR scale`);
        }
        this.votes.set(itemIndex, {
            item_index: itemIndex,
            rating,
            listen_complete: listenComplete,
            timestamp: this.now().toISOString(),
        });
    }

    voteFor(itemIndex: number): WorkerVote | undefined {
        return this.votes.get(itemIndex);
    }

    /** Sections still blocking submission, in presentation order. */
    missingSections(): string[] {
        const missing: string[] = [];
        if (!this.instructionDone) missing.push("Instruction");
        if (this.plan.qualificationAssigned && this.hearingAnswers === null) {
            missing.push("Qualification");
        }
        if (Object.keys(this.deviceAnswers).length === 0 ||
            Object.keys(this.environmentAnswers).length === 0) {
            missing.push("Setup");
        }
        if (this.trainingRequired && this.trainingAnswers === null) {
            missing.push("Training");
        }
        if (this.votes.size < this.plan.itemCount) {
            missing.push("Rating");
        }
        return missing;
    }

    buildSubmission(): SubmissionPayload {
        const missing = this.missingSections();
        if (missing.length > 0) {
            throw new Error(`submission blocked; incomplete sections: ${missing.join(", ")}`);
        }
        const votes = [...this.votes.values()].sort((a, b) => a.item_index - b.item_index);
        const payload: SubmissionPayload = {
            worker_id: this.plan.workerId,
            assignment_id: this.plan.assignmentId,
            session_timestamp: this.now().toISOString(),
            section_id: this.plan.sectionId,
            device_check_answers: this.deviceAnswers,
            environment_test_answers: this.environmentAnswers,
            votes,
        };
        if (this.hearingAnswers !== null) payload.hearing_test_answers = this.hearingAnswers;
        if (this.trainingAnswers !== null) payload.training_answers = this.trainingAnswers;
        // forward the pre-session timestamp so the 60-minute rule stays auditable
        if (this.lastTraining !== null) payload.last_training_timestamp = this.lastTraining;
        return payload;
    }
}
