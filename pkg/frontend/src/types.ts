// Wire formats shared with the study service (see docs/*.schema.json in the
// repository root). The page only ever sees blinded section items: URIs and
// an item index, never trial ids, presentation order or gold flags.

export interface SectionItemView {
    item_index: number;
    clip_first_url: string;
    clip_second_url: string;
}

export interface SectionView {
    section_id: string;
    items: SectionItemView[];
}

export interface WorkerVote {
    item_index: number;
    rating: number;
    listen_complete: boolean;
    timestamp?: string;
}

export interface SubmissionPayload {
    worker_id: string;
    assignment_id: string;
    session_timestamp: string;
    section_id: string;
    device_check_answers: Record<string, string>;
    environment_test_answers: Record<string, string>;
    hearing_test_answers?: Record<string, string>;
    training_answers?: Record<string, string>;
    last_training_timestamp?: string;
    votes: WorkerVote[];
}

export const CCR_SCALE: ReadonlyArray<{ value: number; label: string }> = [
    { value: -3, label: "Much Worse" },
    { value: -2, label: "Worse" },
    { value: -1, label: "Slightly Worse" },
    { value: 0, label: "About the Same" },
    { value: 1, label: "Slightly Better" },
    { value: 2, label: "Better" },
    { value: 3, label: "Much Better" },
];
