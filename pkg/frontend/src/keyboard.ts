/** Keyboard shortcuts: Enter confirms the pending click, N marks the slot
 * un-annotatable, arrows navigate images (left/right) and GCPs (up/down).
 */

import { AnnotationSession } from "./session.js";

export type KeyAction =
  | "confirm"
  | "cannot_annotate"
  | "prev_image"
  | "next_image"
  | "prev_gcp"
  | "next_gcp"
  | null;

export function actionForKey(key: string): KeyAction {
  switch (key) {
    case "Enter":
      return "confirm";
    case "n":
    case "N":
      return "cannot_annotate";
    case "ArrowLeft":
      return "prev_image";
    case "ArrowRight":
      return "next_image";
    case "ArrowUp":
      return "prev_gcp";
    case "ArrowDown":
      return "next_gcp";
    default:
      return null;
  }
}

export async function dispatchKey(
  session: AnnotationSession,
  key: string,
): Promise<KeyAction> {
  const action = actionForKey(key);
  switch (action) {
    case "confirm":
      await session.confirm();
      break;
    case "cannot_annotate":
      await session.cannotAnnotate();
      break;
    case "prev_image":
      session.move(0, -1);
      break;
    case "next_image":
      session.move(0, 1);
      break;
    case "prev_gcp":
      session.move(-1, 0);
      break;
    case "next_gcp":
      session.move(1, 0);
      break;
    case null:
      break;
  }
  return action;
}
