import { StripChart } from "./chart.js";
import { InputTracker } from "./input.js";
import { buildCommand, UiSessionModel } from "./model.js";
import {
  commandMessage,
  configMessage,
  InboundSeqCheck,
  parseMessage,
  ScenePayload,
  SeqCounter,
  StatePayload,
} from "./protocol.js";
import { makeViewport, SceneRenderer } from "./scene.js";

const model = new UiSessionModel();
const input = new InputTracker();
const seqOut = new SeqCounter();
const seqIn = new InboundSeqCheck();
let socket: WebSocket | null = null;

const sceneCanvas = document.getElementById("scene") as HTMLCanvasElement;
const chartCanvas = document.getElementById("chart") as HTMLCanvasElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const status = document.getElementById("status") as HTMLSpanElement;
const conditionSel = document.getElementById(
  "conditions",
) as HTMLSelectElement;

const renderer = new SceneRenderer(
  sceneCanvas.getContext("2d")!,
  makeViewport(sceneCanvas.width, sceneCanvas.height),
);
const chart = new StripChart(chartCanvas.getContext("2d")!, {
  width: chartCanvas.width,
  height: chartCanvas.height,
  padding: 8,
});

input.attach(sceneCanvas);

function connect(): void {
  const url = `ws://${location.host}/ws`;
  console.log(`connecting to ${url}`);
  socket = new WebSocket(url);

  socket.addEventListener("open", () => {
    model.connected = true;
    status.textContent = "connected";
    status.className = "ok";
  });

  socket.addEventListener("close", () => {
    model.connected = false;
    status.textContent = "disconnected (retrying)";
    status.className = "bad";
    socket = null;
    setTimeout(connect, 1000);
  });

  socket.addEventListener("error", (ev) => {
    console.log("socket error", ev);
  });

  socket.addEventListener("message", (ev) => {
    const msg = parseMessage(ev.data as string);
    if (msg === null || !seqIn.accept(msg.seq)) {
      return;
    }
    if (msg.type === "config") {
      model.onScene(msg.payload as unknown as ScenePayload, performance.now());
    } else if (msg.type === "state") {
      model.onState(
        msg.payload as unknown as StatePayload,
        msg.t,
        performance.now(),
      );
    } else if (msg.type === "event") {
      const warning = (msg.payload as { warning?: string }).warning;
      if (warning) {
        model.onWarning(warning);
        console.log("service:", warning);
      }
    }
  });
}

conditionSel.addEventListener("change", () => {
  const [delay, rate] = conditionSel.value.split("/").map(Number);
  model.selected = { delay, rate };
  if (socket !== null && model.connected) {
    socket.send(
      configMessage(seqOut.take(), model.state?.tick ?? 0, model.selected),
    );
  }
});

function sendLoop(): void {
  const now = performance.now();
  if (
    socket !== null &&
    model.scene !== null &&
    model.shouldSend(now, input.changed, input.hasOneShot())
  ) {
    const payload = buildCommand(input.state, model.scene.workspace_radius);
    socket.send(commandMessage(seqOut.take(), model.state?.tick ?? 0, payload));
    model.markSent(now);
    input.changed = false;
    input.consumeOneShots();
  }
}

function frame(): void {
  sendLoop();
  if (model.scene !== null && model.state !== null) {
    renderer.draw(model.scene, model.state, input.state.drag);
    chart.draw(model.history);
  }
  banner.hidden = !model.isStale(performance.now());
  requestAnimationFrame(frame);
}

connect();
requestAnimationFrame(frame);
