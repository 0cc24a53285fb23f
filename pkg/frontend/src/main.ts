import { ServiceClient } from "./api";
import { SessionController } from "./controller";
import { render } from "./render";

const SERVICE_BASE = (window as { NARROWPASS_SERVICE?: string }).NARROWPASS_SERVICE ?? "http://127.0.0.1:8008";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function bootstrap(): Promise<void> {
  const canvas = el<HTMLCanvasElement>("view");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("canvas 2d context unavailable");
  const banner = el<HTMLDivElement>("banner");
  const picker = el<HTMLSelectElement>("scene-picker");
  const client = new ServiceClient(SERVICE_BASE);

  const controller = new SessionController(client, {
    onView: (view) => render(ctx, view, canvas.width, canvas.height),
    onSave: (result) => {
      const rep = result.report;
      banner.textContent = rep.success
        ? `saved ${result.csv_path} — verified feasible`
        : `saved ${result.csv_path} — FAILURE: waypoint=${rep.first_fail_waypoint} type=${rep.violation}`;
      banner.className = rep.success ? "ok" : "bad";
    },
    onError: (message) => {
      banner.textContent = message;
      banner.className = "bad";
    },
  });

  const refreshScenes = async () => {
    const { scenes } = await client.listScenes();
    picker.innerHTML = "";
    for (const id of scenes) {
      const opt = document.createElement("option");
      opt.value = id;
      opt.textContent = id;
      picker.appendChild(opt);
    }
  };

  el<HTMLButtonElement>("start").addEventListener("click", async () => {
    if (!picker.value) return;
    banner.textContent = "";
    await controller.start({ scene_id: picker.value });
    canvas.focus();
  });

  el<HTMLButtonElement>("generate").addEventListener("click", async () => {
    const seed = Number(el<HTMLInputElement>("seed").value) || 0;
    const doc = await client.generateScene({ seed, num_openings: 2 });
    await refreshScenes();
    picker.value = doc.id;
    banner.textContent = `generated ${doc.id}`;
    banner.className = "ok";
  });

  window.addEventListener("keydown", (e) => {
    // Keys the client owns must not scroll the page.
    if (["ArrowUp", "ArrowDown", "ArrowLeft", "ArrowRight", "Enter", " "].includes(e.key)) {
      e.preventDefault();
    }
    void controller.handleKey(e.key);
  });

  await refreshScenes();
}

void bootstrap();
