//! HTTP front end: JSON over the routes under `/v1`.

use std::net::{IpAddr, SocketAddr};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{ConnectInfo, FromRequest, FromRequestParts, Request, State};
use axum::http::request::Parts;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;

use crate::api::{
    AddHashesRequest, AddHashesResponse, CaptchaAnswer, CaptchaVerifyResponse, Credentials,
    ErrorBody, GetKeyRequest, GetKeyResponse, KeysResponse, RegisterResponse, StatsResponse,
    UpdateRequest, UpdateResponse,
};
use crate::error::ServiceError;
use crate::service::KeyService;

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<KeyService>,
    pub trust_forwarded_for: bool,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::Auth | ServiceError::SessionExpired => StatusCode::UNAUTHORIZED,
            ServiceError::RateLimited { .. } => StatusCode::TOO_MANY_REQUESTS,
            ServiceError::InvalidDate(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Expired => StatusCode::GONE,
            ServiceError::CaptchaRequired(_)
            | ServiceError::HashMismatch
            | ServiceError::NotOwner => StatusCode::FORBIDDEN,
            ServiceError::NotFound => StatusCode::NOT_FOUND,
            ServiceError::UsernameTaken => StatusCode::CONFLICT,
            ServiceError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Storage(e) => {
                tracing::error!("storage failure: {e}");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let retry = match &self {
            ServiceError::RateLimited { retry_after_secs } => Some(*retry_after_secs),
            _ => None,
        };
        let body = ErrorBody {
            code: self.code().to_owned(),
            message: self.to_string(),
            challenge: match self {
                ServiceError::CaptchaRequired(c) => Some(c),
                _ => None,
            },
            retry_after_secs: retry,
        };
        let mut resp = (status, Json(body)).into_response();
        if let Some(secs) = retry {
            resp.headers_mut()
                .insert(header::RETRY_AFTER, HeaderValue::from(secs));
        }
        resp
    }
}

/// JSON body whose rejections use the common error shape.
pub struct ApiJson<T>(pub T);

impl<T: DeserializeOwned, S: Send + Sync> FromRequest<S> for ApiJson<T> {
    type Rejection = ServiceError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        Json::<T>::from_request(req, state)
            .await
            .map(|Json(v)| ApiJson(v))
            .map_err(|e: JsonRejection| ServiceError::InvalidRequest(e.body_text()))
    }
}

/// Address the request is charged to.
pub struct Source(pub IpAddr);

impl FromRequestParts<AppState> for Source {
    type Rejection = ServiceError;

    async fn from_request_parts(
        parts: &mut Parts,
        state: &AppState,
    ) -> Result<Self, Self::Rejection> {
        if state.trust_forwarded_for {
            let forwarded = parts
                .headers
                .get("x-forwarded-for")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.split(',').next())
                .and_then(|v| v.trim().parse().ok());
            if let Some(ip) = forwarded {
                return Ok(Source(ip));
            }
        }
        ConnectInfo::<SocketAddr>::from_request_parts(parts, state)
            .await
            .map(|ConnectInfo(addr)| Source(addr.ip()))
            .map_err(|_| ServiceError::InvalidRequest("unknown peer address".into()))
    }
}

/// Token from `Authorization: Bearer ...`.
pub struct Bearer(pub String);

impl<S: Send + Sync> FromRequestParts<S> for Bearer {
    type Rejection = ServiceError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, Self::Rejection> {
        parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(|t| Bearer(t.trim().to_owned()))
            .ok_or(ServiceError::Auth)
    }
}

type ApiResult<T> = Result<Json<T>, ServiceError>;

/// Run password hashing off the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(ServiceError::InvalidRequest(format!("worker failed: {e}"))))
}

async fn register(
    State(st): State<AppState>,
    Source(ip): Source,
    ApiJson(cred): ApiJson<Credentials>,
) -> Result<(StatusCode, Json<RegisterResponse>), ServiceError> {
    let account_id = blocking(move || st.service.register(ip, &cred)).await?;
    Ok((StatusCode::CREATED, Json(RegisterResponse { account_id })))
}

async fn login(
    State(st): State<AppState>,
    Source(ip): Source,
    ApiJson(cred): ApiJson<Credentials>,
) -> ApiResult<crate::api::LoginResponse> {
    Ok(Json(blocking(move || st.service.login(ip, &cred)).await?))
}

async fn create_key(
    State(st): State<AppState>,
    Source(ip): Source,
    Bearer(token): Bearer,
) -> ApiResult<crate::api::CreateKeyResponse> {
    Ok(Json(st.service.create_key(ip, &token)?))
}

async fn add_hashes(
    State(st): State<AppState>,
    Source(ip): Source,
    Bearer(token): Bearer,
    ApiJson(req): ApiJson<AddHashesRequest>,
) -> ApiResult<AddHashesResponse> {
    let key_id = st.service.add_hashes(ip, &token, &req)?;
    Ok(Json(AddHashesResponse { key_id }))
}

async fn get_key(
    State(st): State<AppState>,
    Source(ip): Source,
    ApiJson(req): ApiJson<GetKeyRequest>,
) -> ApiResult<GetKeyResponse> {
    let key = st.service.get_key(ip, &req)?;
    Ok(Json(GetKeyResponse {
        key: *key.as_bytes(),
    }))
}

async fn update(
    State(st): State<AppState>,
    Source(ip): Source,
    Bearer(token): Bearer,
    ApiJson(req): ApiJson<UpdateRequest>,
) -> ApiResult<UpdateResponse> {
    let expdate = st
        .service
        .update_expiration(ip, &token, &req.key_id, req.expdate)?;
    Ok(Json(UpdateResponse {
        key_id: req.key_id,
        expdate,
    }))
}

async fn list_keys(
    State(st): State<AppState>,
    Source(ip): Source,
    Bearer(token): Bearer,
) -> ApiResult<KeysResponse> {
    Ok(Json(KeysResponse {
        keys: st.service.list_keys(ip, &token)?,
    }))
}

async fn verify_captcha(
    State(st): State<AppState>,
    Source(ip): Source,
    ApiJson(req): ApiJson<CaptchaAnswer>,
) -> ApiResult<CaptchaVerifyResponse> {
    let passed = st
        .service
        .verify_captcha(ip, &req.challenge_id, &req.solution)?;
    Ok(Json(CaptchaVerifyResponse { passed }))
}

async fn stats(State(st): State<AppState>) -> Json<StatsResponse> {
    Json(StatsResponse {
        live_sessions: st.service.live_sessions(),
        records: st.service.record_count(),
    })
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/register", post(register))
        .route("/v1/login", post(login))
        .route("/v1/createkey", post(create_key))
        .route("/v1/addhashes", post(add_hashes))
        .route("/v1/getkey", post(get_key))
        .route("/v1/update", post(update))
        .route("/v1/keys", get(list_keys))
        .route("/v1/captcha/verify", post(verify_captcha))
        .route("/v1/stats", get(stats))
        .route("/healthz", get(|| async { "ok" }))
        .with_state(state)
}

/// Serve until `shutdown` resolves, purging stale state once a minute.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let service = state.service.clone();
    let janitor = tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            service.purge_expired();
        }
    });
    let app = router(state).into_make_service_with_connect_info::<SocketAddr>();
    let result = axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await;
    janitor.abort();
    result
}
