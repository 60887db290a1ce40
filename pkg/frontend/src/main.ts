// Page wiring. The page walks one rating section item by item: play both
// clips (single player, automatic sequence), unlock the scale, record the
// vote, move on. Submission happens once, at the end of the section.

import { ApiConfig, downloadPayload, fetchSection, postSubmission } from "./api.js";
import { feedbackMessage } from "./feedback.js";
import { Phase, PlaybackController } from "./playback.js";
import { SessionController } from "./session.js";
import { CCR_SCALE, SectionView } from "./types.js";

function element<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
}

const htmlAudioBackend = {
    play(uri: string): Promise<void> {
        return new Promise((resolve, reject) => {
            const audio = new Audio(uri);
            audio.addEventListener("ended", () => resolve(), { once: true });
            audio.addEventListener("error", () => reject(new Error(`cannot play ${uri}`)), { once: true });
            void audio.play().catch(reject);
        });
    },
};

const localStore = {
    get: (key: string) => window.localStorage.getItem(key),
    set: (key: string, value: string) => window.localStorage.setItem(key, value),
};

export async function bootstrap(): Promise<void> {
    const params = new URLSearchParams(window.location.search);
    const config: ApiConfig = {
        baseUrl: params.get("endpoint") ?? "",
        studyId: params.get("study") ?? "",
    };
    const sectionId = params.get("section") ?? "";
    const workerId = params.get("worker") ?? `w-${Math.random().toString(36).slice(2, 10)}`;

    const section: SectionView = await fetchSection(config, sectionId);
    const session = new SessionController(
        {
            workerId,
            assignmentId: `${workerId}-${section.section_id}`,
            sectionId: section.section_id,
            itemCount: section.items.length,
            qualificationAssigned: params.get("qualification") === "1",
        },
        localStore,
    );

    const playback = new PlaybackController(htmlAudioBackend);
    const indicator = element<HTMLDivElement>("playing-indicator");
    const progress = element<HTMLDivElement>("progress");
    const playButton = element<HTMLButtonElement>("play-button");
    const replayButton = element<HTMLButtonElement>("replay-button");
    const nextButton = element<HTMLButtonElement>("next-button");
    const scaleBox = element<HTMLDivElement>("scale");
    const feedbackBox = element<HTMLDivElement>("feedback");
    const statusBox = element<HTMLDivElement>("status");

    let currentIndex = 0;
    let selectedRating: number | null = null;
    const ratingButtons: HTMLButtonElement[] = [];

    for (const category of CCR_SCALE) {
        const button = document.createElement("button");
        button.textContent = `${category.label} (${category.value})`;
        button.disabled = true;
        button.addEventListener("click", () => {
            selectedRating = category.value;
            ratingButtons.forEach((b) => b.classList.remove("selected"));
            button.classList.add("selected");
            nextButton.disabled = false;
        });
        scaleBox.appendChild(button);
        ratingButtons.push(button);
    }

    playback.onPhaseChange((phase) => {
        indicator.textContent =
            phase === Phase.Gap ? "…" : playback.playingLabel ?? (phase === Phase.Done ? "Done" : "");
        const enabled = playback.ratingEnabled;
        ratingButtons.forEach((b) => (b.disabled = !enabled));
        replayButton.disabled = !(phase === Phase.Done || playback.unratable);
    });

    function showItem(index: number): void {
        progress.textContent = `Item ${index + 1} of ${section.items.length}`;
        selectedRating = null;
        nextButton.disabled = true;
        playButton.disabled = false;
        replayButton.disabled = true;
        feedbackBox.textContent = "";
        ratingButtons.forEach((b) => {
            b.disabled = true;
            b.classList.remove("selected");
        });
    }

    async function playCurrent(replay: boolean): Promise<void> {
        const item = section.items[currentIndex];
        playButton.disabled = true;
        try {
            if (replay) {
                await playback.replay(item.clip_first_url, item.clip_second_url);
            } else {
                await playback.start(item.clip_first_url, item.clip_second_url);
            }
        } catch {
            if (playback.unratable) {
                statusBox.textContent = "This item could not be played and was marked unratable.";
                session.recordVote(currentIndex, 0, false);
                nextButton.disabled = false;
            } else {
                statusBox.textContent = "Playback failed, please try again.";
                playButton.disabled = false;
            }
        }
    }

    playButton.addEventListener("click", () => void playCurrent(false));
    replayButton.addEventListener("click", () => void playCurrent(true));

    nextButton.addEventListener("click", () => {
        if (selectedRating !== null) {
            session.recordVote(currentIndex, selectedRating, !playback.unratable);
            const message = feedbackMessage(selectedRating);
            // training items surface corrective feedback before advancing
            if (params.get("training") === "1" && message) {
                feedbackBox.textContent = message;
            }
        }
        if (currentIndex + 1 < section.items.length) {
            currentIndex += 1;
            playback.nextItem();
            showItem(currentIndex);
        } else {
            void submit();
        }
    });

    async function submit(): Promise<void> {
        try {
            const payload = session.buildSubmission();
            if (config.baseUrl) {
                const result = await postSubmission(config, payload);
                statusBox.textContent = `Submitted. Screening: ${result.accepted ?? "pending"}`;
            } else {
                downloadPayload(payload);
                statusBox.textContent = "Payload downloaded; attach it to the platform task.";
            }
        } catch (error) {
            statusBox.textContent = String(error);
        }
    }

    // setup/training answers arrive from the page's earlier sections; the
    // minimal standalone flow seeds them from query parameters for testing
    session.acknowledgeInstructions();
    session.recordDeviceCheck({ stereo_word: params.get("stereo") ?? "" });
    session.recordEnvironmentTest(JSON.parse(params.get("env") ?? "{}"));
    if (session.trainingRequired) {
        session.recordTraining({ acknowledged: "1" });
    }
    if (params.get("qualification") === "1") {
        session.recordHearingTest(JSON.parse(params.get("hearing") ?? "{}"));
    }

    showItem(0);
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
    window.addEventListener("DOMContentLoaded", () => void bootstrap());
}
