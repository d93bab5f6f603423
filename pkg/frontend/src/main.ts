import { mountApp } from "./app";

window.addEventListener("DOMContentLoaded", () => {
  mountApp();
});
