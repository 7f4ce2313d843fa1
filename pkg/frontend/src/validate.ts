/**
 * Client-side checks for the patient-details form. These mirror the
 * service's own record validation so obviously bad input never leaves the
 * browser; the service remains the authority.
 */

export const MAX_USERNAME_BYTES = 256;
export const MAX_AGE = 200;

const DECIMAL_RE = /^-?(\d+(\.\d+)?|\.\d+)$/;
const INTEGER_RE = /^\d+$/;

export interface RecordFormInput {
  username: string;
  age: string;
  temperature: string;
  time: string;
  patientId: string;
}

export interface RecordPayload {
  username: string;
  age: number;
  temperature: string;
  time: string;
  patient_id: number;
}

export type RecordValidation =
  | { ok: true; value: RecordPayload }
  | { ok: false; errors: Partial<Record<keyof RecordFormInput, string>> };

export function validateRecordForm(input: RecordFormInput): RecordValidation {
  const errors: Partial<Record<keyof RecordFormInput, string>> = {};

  const username = input.username.trim();
  if (!username) {
    errors.username = "username is required";
  } else if (new TextEncoder().encode(username).length > MAX_USERNAME_BYTES) {
    errors.username = `username exceeds ${MAX_USERNAME_BYTES} bytes`;
  }

  const age = input.age.trim();
  if (!INTEGER_RE.test(age)) {
    errors.age = "age must be a whole number";
  } else if (parseInt(age, 10) > MAX_AGE) {
    errors.age = `age must be between 0 and ${MAX_AGE}`;
  }

  const temperature = input.temperature.trim();
  if (!DECIMAL_RE.test(temperature)) {
    errors.temperature = "temperature must be numeric";
  }

  const time = input.time.trim();
  if (!DECIMAL_RE.test(time)) {
    errors.time = "time must be numeric";
  }

  const patientId = input.patientId.trim();
  if (!INTEGER_RE.test(patientId) || parseInt(patientId, 10) < 1) {
    errors.patientId = "patient id must be a positive integer";
  }

  if (Object.keys(errors).length > 0) {
    return { ok: false, errors };
  }
  return {
    ok: true,
    value: {
      username,
      age: parseInt(age, 10),
      temperature,
      time,
      patient_id: parseInt(patientId, 10),
    },
  };
}
