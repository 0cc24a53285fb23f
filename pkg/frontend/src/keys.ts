// Keyboard bindings: arrows translate, A/D rotate, ENTER records the current
// pose, R resets to the start pose, C clears recordings, S saves.

export type MoveAction = { kind: "move"; dx: number; dy: number; dphi: number };
export type Action =
  | MoveAction
  | { kind: "record" }
  | { kind: "reset" }
  | { kind: "clear" }
  | { kind: "save" };

export function actionForKey(key: string, linStep: number, angStep: number): Action | null {
  switch (key) {
    case "ArrowRight":
      return { kind: "move", dx: +linStep, dy: 0, dphi: 0 };
    case "ArrowLeft":
      return { kind: "move", dx: -linStep, dy: 0, dphi: 0 };
    case "ArrowUp":
      return { kind: "move", dx: 0, dy: +linStep, dphi: 0 };
    case "ArrowDown":
      return { kind: "move", dx: 0, dy: -linStep, dphi: 0 };
    case "a":
    case "A":
      return { kind: "move", dx: 0, dy: 0, dphi: +angStep };
    case "d":
    case "D":
      return { kind: "move", dx: 0, dy: 0, dphi: -angStep };
    case "Enter":
      return { kind: "record" };
    case "r":
    case "R":
      return { kind: "reset" };
    case "c":
    case "C":
      return { kind: "clear" };
    case "s":
    case "S":
      return { kind: "save" };
    default:
      return null;
  }
}
