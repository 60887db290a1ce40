// Thin transport layer: fetch blinded sections, POST the payload to the
// configured endpoint, or fall back to a local download for manual platform
// flows. Retries are idempotent because the assignment id keys the slot
// server-side.

import { SectionView, SubmissionPayload } from "./types.js";

export interface ApiConfig {
    baseUrl: string;
    studyId: string;
}

export async function fetchSection(config: ApiConfig, sectionId: string): Promise<SectionView> {
    const response = await fetch(
        `${config.baseUrl}/studies/${encodeURIComponent(config.studyId)}/sections/${encodeURIComponent(sectionId)}`,
    );
    if (!response.ok) {
        throw new Error(`failed to fetch section ${sectionId}: HTTP ${response.status}`);
    }
    return (await response.json()) as SectionView;
}

export async function postSubmission(
    config: ApiConfig,
    payload: SubmissionPayload,
    retries = 2,
): Promise<{ accepted?: boolean; reasons?: string[] }> {
    let lastError: unknown = null;
    for (let attempt = 0; attempt <= retries; attempt += 1) {
        try {
            const response = await fetch(
                `${config.baseUrl}/studies/${encodeURIComponent(config.studyId)}/submissions`,
                {
                    method: "POST",
                    headers: { "Content-Type": "application/json" },
                    body: JSON.stringify(payload),
                },
            );
            if (response.status === 201) {
                return (await response.json()) as { accepted?: boolean; reasons?: string[] };
            }
            throw new Error(`submission rejected: HTTP ${response.status} ${await response.text()}`);
        } catch (error) {
            lastError = error;
        }
    }
    throw lastError;
}

/** Manual-platform fallback: hand the payload to the worker as a JSON file. */
export function downloadPayload(payload: SubmissionPayload, doc: Document = document): void {
    const blob = new Blob([JSON.stringify(payload, null, 2)], { type: "application/json" });
    const anchor = doc.createElement("a");
    anchor.href = URL.createObjectURL(blob);
    anchor.download = `${payload.assignment_id}.json`;
    anchor.click();
    URL.revokeObjectURL(anchor.href);
}
