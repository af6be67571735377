import { ApiClient } from "./api";
import { App } from "./app";
import "./styles.css";

const api = new ApiClient("");
const rootEl = document.getElementById("app");
if (rootEl) {
  const app = new App(api, rootEl);
  const params = new URLSearchParams(window.location.search);
  void app.boot(params.get("dataset") ?? undefined).catch((err) => {
    rootEl.textContent = `failed to start: ${err}`;
  });
}
