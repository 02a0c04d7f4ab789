import { mount } from "./ui.js";

declare global {
  interface Window {
    DRAFTRANK_BASE_URL?: string;
  }
}

const baseUrl = window.DRAFTRANK_BASE_URL ?? "http://127.0.0.1:8000";
mount(document.getElementById("app")!, baseUrl);
