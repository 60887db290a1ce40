// Training-gold feedback: workers who stray too far from the expected
// "About the Same" answer get a corrective message before moving on.

export const EXPECTED_TRAINING_ANSWER = 0;
export const DEFAULT_GOLD_TOLERANCE = 1;

export function needsFeedback(
    answer: number,
    expected: number = EXPECTED_TRAINING_ANSWER,
    tolerance: number = DEFAULT_GOLD_TOLERANCE,
): boolean {
    return Math.abs(answer - expected) > tolerance;
}

export function feedbackMessage(answer: number, expected: number = EXPECTED_TRAINING_ANSWER): string | null {
    if (!needsFeedback(answer, expected)) return null;
    return (
        "Both clips in this training question were identical, so the expected " +
        'answer is "About the Same". Please listen to both clips fully before rating.'
    );
}
