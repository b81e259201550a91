import { CompassApi } from './api.js';
import { TriageApp } from './app.js';

// Browser entry point: connect to a running service and session, e.g.
//   index.html?service=http://127.0.0.1:8765&session=<id>

function bootstrap(): void {
  const params = new URLSearchParams(window.location.search);
  const service = params.get('service') ?? 'http://127.0.0.1:8765';
  const session = params.get('session');
  const root = document.getElementById('app');
  if (!root) return;
  if (!session) {
    root.textContent =
      'No session given. Start the service (compass serve), create a session, ' +
      'then open index.html?service=<url>&session=<id>.';
    return;
  }
  const app = new TriageApp(root, new CompassApi(service, session));
  void app.start();
}

bootstrap();
