// Sequential two-clip playback: first clip, one second of silence, second
// clip. Rating stays locked until the full sequence finished. The audio
// backend and the clock are injected so the state machine is testable
// without real media.

export enum Phase {
    Idle = "Idle",
    PlayingFirst = "PlayingFirst",
    Gap = "Gap",
    PlayingSecond = "PlayingSecond",
    Done = "Done",
}

export interface AudioBackend {
    /** Resolves when the clip played to its end; rejects on load/play failure. */
    play(uri: string): Promise<void>;
}

export interface Scheduler {
    delay(ms: number): Promise<void>;
}

export const realScheduler: Scheduler = {
    delay: (ms) => new Promise((resolve) => setTimeout(resolve, ms)),
};

export const GAP_MS = 1000;
export const MAX_LOAD_FAILURES = 3;

export type PhaseListener = (phase: Phase) => void;

export class PlaybackController {
    private phase_: Phase = Phase.Idle;
    private replays_ = 0;
    private failures_ = 0;
    private unratable_ = false;
    private running = false;
    private listeners: PhaseListener[] = [];

    constructor(
        private readonly audio: AudioBackend,
        private readonly scheduler: Scheduler = realScheduler,
        private readonly gapMs: number = GAP_MS,
    ) {}

    get phase(): Phase {
        return this.phase_;
    }

    get replayCount(): number {
        return this.replays_;
    }

    get failureCount(): number {
        return this.failures_;
    }

    /** Marked after MAX_LOAD_FAILURES playback errors; logged in the payload. */
    get unratable(): boolean {
        return this.unratable_;
    }

    /** Rating controls unlock only once the whole sequence was heard. */
    get ratingEnabled(): boolean {
        return this.phase_ === Phase.Done && !this.unratable_;
    }

    /** Which clip indicator to light up, or null outside playback. */
    get playingLabel(): "Clip A" | "Clip B" | null {
        if (this.phase_ === Phase.PlayingFirst) return "Clip A";
        if (this.phase_ === Phase.PlayingSecond) return "Clip B";
        return null;
    }

    onPhaseChange(listener: PhaseListener): void {
        this.listeners.push(listener);
    }

    private setPhase(phase: Phase): void {
        this.phase_ = phase;
        for (const listener of this.listeners) listener(phase);
    }

    /** Play first clip, the silent gap, then the second clip. */
    async start(firstUri: string, secondUri: string): Promise<void> {
        if (this.running || this.unratable_) return;
        this.running = true;
        try {
            this.setPhase(Phase.PlayingFirst);
            await this.audio.play(firstUri);
            this.setPhase(Phase.Gap);
            await this.scheduler.delay(this.gapMs);
            this.setPhase(Phase.PlayingSecond);
            await this.audio.play(secondUri);
            this.setPhase(Phase.Done);
        } catch (error) {
            this.failures_ += 1;
            this.setPhase(Phase.Idle);
            if (this.failures_ >= MAX_LOAD_FAILURES) {
                this.unratable_ = true;
            }
            throw error;
        } finally {
            this.running = false;
        }
    }

    /** Restart the full sequence; allowed any number of times, count logged. */
    async replay(firstUri: string, secondUri: string): Promise<void> {
        if (this.running || this.unratable_) return;
        this.replays_ += 1;
        this.setPhase(Phase.Idle);
        await this.start(firstUri, secondUri);
    }

    /** Reset for the next section item. */
    nextItem(): void {
        if (this.running) throw new Error("cannot advance while audio is playing");
        this.phase_ = Phase.Idle;
        this.replays_ = 0;
        this.failures_ = 0;
        this.unratable_ = false;
    }
}
